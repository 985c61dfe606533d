#include "logtensor/module_io.hpp"

#include <json.hpp>

#include "json_util.hpp"
#include "logtensor/errors.hpp"

namespace logtensor {

namespace {

using nlohmann::json;

const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(path + ": missing field '" + key + "'");
    return *it;
}

Rational rational_field(const json& j, const char* key, const std::string& path) {
    const json& f = field(j, key, path);
    if (!f.is_string()) throw ValidationError(path + "." + key + ": expected a rational string");
    try {
        return Rational::parse(f.get<std::string>());
    } catch (const ParseError& e) {
        throw ValidationError(path + "." + key + ": " + e.what());
    }
}

std::string string_field(const json& j, const char* key, const std::string& path) {
    const json& f = field(j, key, path);
    if (!f.is_string()) throw ValidationError(path + "." + key + ": expected a string");
    return f.get<std::string>();
}

std::vector<long> label_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError(path + ": expected an integer array");
    std::vector<long> out;
    for (const auto& e : j) {
        if (!e.is_number_integer()) throw ValidationError(path + ": labels must be integers");
        out.push_back(e.get<long>());
    }
    return out;
}

Scalar entry_value(const json& j, const std::string& path) {
    if (j.is_string()) {
        try {
            return Scalar(Rational::parse(j.get<std::string>()));
        } catch (const ParseError& e) {
            throw ValidationError(path + ": " + e.what());
        }
    }
    try {
        return jsonu::scalar_from_json(j);
    } catch (const CalcError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

Mat triplet_matrix(const json& j, int dim, const std::string& path) {
    if (!j.is_array()) throw ValidationError(path + ": expected a triplet array");
    Mat m(dim, dim);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        const json& t = j[i];
        if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() ||
            !t[1].is_number_integer()) {
            throw ValidationError(p + ": expected [row, col, value]");
        }
        int r = t[0].get<int>();
        int c = t[1].get<int>();
        if (r < 0 || r >= dim || c < 0 || c >= dim) {
            throw ValidationError(p + ": index outside the basis (dim " + std::to_string(dim) + ")");
        }
        m.at(r, c) += entry_value(t[2], p + "[2]");
    }
    return m;
}

json matrix_triplets(const Mat& m) {
    json out = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            const Scalar& s = m.at(r, c);
            if (s.is_zero()) continue;
            json v;
            if (s.is_rational()) {
                v = s.rat().str();
            } else {
                v = jsonu::scalar_to_json(s);
            }
            out.push_back(json::array({r, c, v}));
        }
    }
    return out;
}

} // namespace

GradedModule module_from_json_string(const std::string& text) {
    json j = jsonu::parse_checked(text, "module file");

    std::vector<BasisVector> basis;
    const json& jb = field(j, "basis", "module");
    if (!jb.is_array() || jb.empty()) throw ValidationError("basis: expected a nonempty array");
    for (std::size_t i = 0; i < jb.size(); ++i) {
        const std::string p = "basis[" + std::to_string(i) + "]";
        BasisVector b;
        b.name = string_field(jb[i], "name", p);
        b.weight = rational_field(jb[i], "weight", p);
        if (jb[i].contains("label")) b.label = label_array(jb[i]["label"], p + ".label");
        basis.push_back(std::move(b));
    }

    const json& jw = field(j, "window", "module");
    GradedModule w(string_field(j, "name", "module"), std::move(basis),
                   rational_field(jw, "lo", "window"), rational_field(jw, "hi", "window"),
                   rational_field(j, "central_charge", "module"));
    if (GradingReport rep = w.strong_grading_check(); !rep.pass) {
        throw ValidationError("basis: " + rep.violations.front());
    }

    if (j.contains("generators")) {
        const json& jg = j["generators"];
        if (!jg.is_object()) throw ValidationError("generators: expected an object");
        for (auto it = jg.begin(); it != jg.end(); ++it) {
            const std::string p = "generators." + it.key();
            GradedModule::GenInfo info;
            info.weight = rational_field(*it, "weight", p);
            if (it->contains("label")) info.label = label_array((*it)["label"], p + ".label");
            if (it->contains("conformal")) {
                if (!(*it)["conformal"].is_boolean()) {
                    throw ValidationError(p + ".conformal: expected a boolean");
                }
                info.is_conformal = (*it)["conformal"].get<bool>();
            }
            if (it->contains("l1")) {
                const json& jl = (*it)["l1"];
                if (!jl.is_array()) throw ValidationError(p + ".l1: expected an array of pairs");
                for (std::size_t i = 0; i < jl.size(); ++i) {
                    const std::string pp = p + ".l1[" + std::to_string(i) + "]";
                    if (!jl[i].is_array() || jl[i].size() != 2 || !jl[i][0].is_string() ||
                        !jl[i][1].is_string()) {
                        throw ValidationError(pp + ": expected [\"coeff\", \"generator\"]");
                    }
                    Rational c;
                    try {
                        c = Rational::parse(jl[i][0].get<std::string>());
                    } catch (const ParseError& e) {
                        throw ValidationError(pp + ": " + e.what());
                    }
                    info.l1_image.emplace_back(c, jl[i][1].get<std::string>());
                }
            }
            w.add_generator(it.key(), std::move(info));
        }
    }
    // Every generator named in an L(1) image must itself be declared.
    for (const auto& [gen, info] : w.generators()) {
        for (const auto& [c, g2] : info.l1_image) {
            (void)c;
            if (!w.has_generator(g2)) {
                throw ValidationError("generators." + gen + ".l1: unknown generator '" + g2 + "'");
            }
        }
    }

    if (j.contains("l_ops")) {
        const json& jl = j["l_ops"];
        if (!jl.is_object()) throw ValidationError("l_ops: expected an object");
        if (jl.contains("lm1")) w.set_l(-1, triplet_matrix(jl["lm1"], w.dim(), "l_ops.lm1"));
        if (jl.contains("l0")) w.set_l(0, triplet_matrix(jl["l0"], w.dim(), "l_ops.l0"));
        if (jl.contains("l1")) w.set_l(1, triplet_matrix(jl["l1"], w.dim(), "l_ops.l1"));
    }

    if (j.contains("modes")) {
        const json& jm = j["modes"];
        if (!jm.is_array()) throw ValidationError("modes: expected an array");
        for (std::size_t i = 0; i < jm.size(); ++i) {
            const std::string p = "modes[" + std::to_string(i) + "]";
            std::string gen = string_field(jm[i], "gen", p);
            if (!w.has_generator(gen)) {
                throw ValidationError(p + ".gen: unknown generator '" + gen + "'");
            }
            Rational n = rational_field(jm[i], "n", p);
            w.set_mode(gen, n, triplet_matrix(field(jm[i], "entries", p), w.dim(), p + ".entries"));
        }
    }

    w.validate();
    return w;
}

std::string module_to_json_string(const GradedModule& w) {
    json j;
    j["name"] = w.name();
    j["central_charge"] = w.central_charge().str();
    j["window"] = {{"lo", w.wmin().str()}, {"hi", w.wmax().str()}};
    j["basis"] = json::array();
    for (const auto& b : w.basis()) {
        json e = {{"name", b.name}, {"weight", b.weight.str()}};
        if (!b.label.empty()) e["label"] = b.label;
        j["basis"].push_back(std::move(e));
    }
    j["generators"] = json::object();
    for (const auto& [gen, info] : w.generators()) {
        json g = {{"weight", info.weight.str()}, {"conformal", info.is_conformal}};
        if (!info.label.empty()) g["label"] = info.label;
        json l1 = json::array();
        for (const auto& [c, g2] : info.l1_image) l1.push_back(json::array({c.str(), g2}));
        g["l1"] = std::move(l1);
        j["generators"][gen] = std::move(g);
    }
    j["l_ops"] = {{"lm1", matrix_triplets(w.l(-1))},
                  {"l0", matrix_triplets(w.l(0))},
                  {"l1", matrix_triplets(w.l(1))}};
    j["modes"] = json::array();
    for (const auto& [key, m] : w.modes()) {
        j["modes"].push_back(
            {{"gen", key.first}, {"n", key.second.str()}, {"entries", matrix_triplets(m)}});
    }
    return j.dump();
}

} // namespace logtensor
