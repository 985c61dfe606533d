#include "logtensor/series_io.hpp"

#include <cctype>
#include <sstream>

#include "json_util.hpp"
#include "logtensor/errors.hpp"

namespace logtensor {

// ---------------------------------------------------------------------------
// Text literal parser

namespace {

struct Tok {
    enum Kind { Num, Ident, Sym, End };
    Kind kind = End;
    std::string text;
    int line = 0, col = 0;
};

[[noreturn]] void fail_at(int line, int col, const std::string& msg) {
    throw ParseError(std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

[[noreturn]] void fail_at(const Tok& t, const std::string& msg) { fail_at(t.line, t.col, msg); }

std::vector<Tok> lex(const std::string& text) {
    std::vector<Tok> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < text.size()) {
        char ch = text[i];
        if (ch == '#') {  // comment to end of line
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            advance(1);
            continue;
        }
        Tok t;
        t.line = line;
        t.col = col;
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && text[j] == '/' && j + 1 < text.size() &&
                std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
                ++j;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            }
            t.kind = Tok::Num;
            t.text = text.substr(i, j - i);
            advance(j - i);
        } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
                ++j;
            }
            t.kind = Tok::Ident;
            t.text = text.substr(i, j - i);
            advance(j - i);
        } else if (std::string("+-*^();:").find(ch) != std::string::npos) {
            t.kind = Tok::Sym;
            t.text = std::string(1, ch);
            advance(1);
        } else {
            fail_at(line, col, std::string("unexpected character '") + ch + "'");
        }
        out.push_back(std::move(t));
    }
    Tok end;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

class Cursor {
  public:
    explicit Cursor(std::vector<Tok> toks) : t_(std::move(toks)) {}
    const Tok& peek() const { return t_[i_]; }
    const Tok& next() { return t_[i_ == t_.size() - 1 ? i_ : i_++]; }
    bool at_sym(const std::string& s) const { return peek().kind == Tok::Sym && peek().text == s; }
    bool eat_sym(const std::string& s) {
        if (!at_sym(s)) return false;
        ++i_;
        return true;
    }
    void expect_sym(const std::string& s) {
        if (!eat_sym(s)) fail_at(peek(), "expected '" + s + "'");
    }

  private:
    std::vector<Tok> t_;
    std::size_t i_ = 0;
};

Rational parse_unsigned_rational(Cursor& c) {
    const Tok& t = c.next();
    if (t.kind != Tok::Num) fail_at(t, "expected a number");
    try {
        return Rational::parse(t.text);
    } catch (const ParseError& e) {
        fail_at(t, e.what());
    }
}

Rational parse_signed_rational(Cursor& c) {
    bool neg = false;
    while (c.at_sym("-") || c.at_sym("+")) neg ^= c.next().text == "-";
    Rational r = parse_unsigned_rational(c);
    return neg ? -r : r;
}

long parse_nonneg_int(Cursor& c, const std::string& what) {
    const Tok& t = c.peek();
    Rational r = parse_unsigned_rational(c);
    if (!r.is_integer() || r.sign() < 0) fail_at(t, what + " must be a nonnegative integer");
    return r.to_long();
}

// vars: x window -3 4 [log N]; y expansion 6 [log N]
Policy parse_header(Cursor& c, std::map<std::string, VarId>& names) {
    const Tok& kw = c.next();
    if (kw.kind != Tok::Ident || kw.text != "vars") fail_at(kw, "series literal must begin with 'vars:'");
    c.expect_sym(":");
    Policy pol;
    while (true) {
        const Tok& nm = c.next();
        if (nm.kind != Tok::Ident) fail_at(nm, "expected a variable name");
        if (names.count(nm.text)) fail_at(nm, "variable '" + nm.text + "' declared twice");
        const Tok& kind = c.next();
        if (kind.kind != Tok::Ident) fail_at(kind, "expected 'window' or 'expansion'");
        VarPolicy vp;
        if (kind.text == "window") {
            Rational lo = parse_signed_rational(c);
            Rational hi = parse_signed_rational(c);
            if (hi < lo) fail_at(kind, "window bounds out of order");
            vp = VarPolicy::window(lo, hi);
        } else if (kind.text == "expansion") {
            vp = VarPolicy::expansion(static_cast<int>(parse_nonneg_int(c, "expansion order")));
        } else {
            fail_at(kind, "expected 'window' or 'expansion'");
        }
        if (c.peek().kind == Tok::Ident && c.peek().text == "log") {
            c.next();
            vp.max_log = static_cast<int>(parse_nonneg_int(c, "log cap"));
        }
        VarId x = VarId::of(nm.text);
        names.emplace(nm.text, x);
        pol.with(x, vp);
        if (!c.eat_sym(";")) break;
    }
    return pol;
}

VarId lookup_var(const Tok& t, const std::map<std::string, VarId>& names) {
    auto it = names.find(t.text);
    if (it == names.end()) fail_at(t, "variable '" + t.text + "' is not declared in the header");
    return it->second;
}

// atom := number | var [^ exponent] | log ( var ) [^ int]
// exponent := int | ( signed-rational )
void parse_atom(Cursor& c, const std::map<std::string, VarId>& names, Rational& coef, Monomial& m) {
    const Tok& t = c.peek();
    if (t.kind == Tok::Num) {
        coef = coef * parse_unsigned_rational(c);
        return;
    }
    if (t.kind != Tok::Ident) fail_at(t, "expected a coefficient, variable, or log(...)");
    if (t.text == "log") {
        c.next();
        c.expect_sym("(");
        const Tok& vn = c.next();
        if (vn.kind != Tok::Ident) fail_at(vn, "expected a variable name inside log(...)");
        VarId x = lookup_var(vn, names);
        c.expect_sym(")");
        long d = 1;
        if (c.eat_sym("^")) d = parse_nonneg_int(c, "log degree");
        m.set_log_deg(x, m.log_deg(x) + static_cast<int>(d));
        return;
    }
    VarId x = lookup_var(t, names);
    c.next();
    Rational e(1);
    if (c.eat_sym("^")) {
        if (c.eat_sym("(")) {
            e = parse_signed_rational(c);
            c.expect_sym(")");
        } else {
            e = parse_unsigned_rational(c);
        }
    }
    m.set_exp(x, m.exp(x) + e);
}

} // namespace

Series parse_series(const std::string& text) {
    Cursor c(lex(text));
    std::map<std::string, VarId> names;
    Policy pol = parse_header(c, names);
    Series s(pol);

    bool first = true;
    while (c.peek().kind != Tok::End) {
        bool neg = false;
        if (!first || c.at_sym("+") || c.at_sym("-")) {
            const Tok& sep = c.peek();
            if (!c.at_sym("+") && !c.at_sym("-")) fail_at(sep, "expected '+' or '-' between terms");
            while (c.at_sym("+") || c.at_sym("-")) neg ^= c.next().text == "-";
        }
        first = false;
        const Tok& start = c.peek();
        Rational coef(1);
        Monomial m;
        parse_atom(c, names, coef, m);
        while (c.eat_sym("*")) parse_atom(c, names, coef, m);
        if (neg) coef = -coef;
        try {
            if (!pol.admits(m)) {
                fail_at(start, "term " + m.str() + " lies outside the declared truncation policy");
            }
        } catch (const PolicyOverflow& e) {
            fail_at(start, e.what());
        }
        s.accum(m, Coef(coef));
    }
    return s;
}

std::string series_to_text(const Series& s) {
    std::ostringstream os;
    os << "vars:";
    bool firstv = true;
    for (const auto& [x, vp] : s.policy().vars()) {
        os << (firstv ? " " : "; ") << x.name() << " ";
        firstv = false;
        if (vp.kind == VarPolicy::Kind::window) {
            os << "window " << vp.lo.str() << " " << vp.hi.str();
        } else {
            os << "expansion " << vp.order;
        }
        if (vp.max_log != kDefaultMaxLog) os << " log " << vp.max_log;
    }
    os << "\n";
    if (s.is_zero()) {
        os << "0";
        return os.str();
    }
    bool firstt = true;
    for (const auto& [m, c] : s.terms()) {
        std::string cs;
        if (c.is_scalar() && c.scalar().is_rational()) {
            Rational r = c.scalar().rat();
            if (!firstt && r.sign() < 0) {
                os << " - ";
                cs = (-r).str();
            } else {
                if (!firstt) os << " + ";
                cs = r.str();
            }
        } else {
            if (!firstt) os << " + ";
            cs = "(" + c.str() + ")";
        }
        firstt = false;
        if (m.is_constant()) {
            os << cs;
        } else if (cs == "1") {
            os << m.str();
        } else {
            os << cs << " * " << m.str();
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// JSON

namespace jsonu {

json rational_to_json(const Rational& r) { return r.str(); }

Rational rational_from_json(const json& j) {
    if (!j.is_string()) throw ValidationError("expected a rational string, got " + j.dump());
    return Rational::parse(j.get<std::string>());
}

json scalar_to_json(const Scalar& s) {
    json j;
    if (!s.is_exact()) {
        Cpx z = s.cpx_value();
        j["re"] = z.real();
        j["im"] = z.imag();
        return j;
    }
    if (s.is_rational()) {
        j["q"] = s.rat().str();
        return j;
    }
    json arr = json::array();
    for (int d = 0; d <= s.zeta_degree(); ++d) {
        const GaussRat& g = s.zeta_coef(d);
        arr.push_back(json::array({g.re.str(), g.im.str()}));
    }
    j["zeta"] = arr;
    return j;
}

Scalar scalar_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("expected a scalar object, got " + j.dump());
    if (j.contains("q")) return Scalar(rational_from_json(j.at("q")));
    if (j.contains("re")) {
        return Scalar::complex(Cpx(j.at("re").get<double>(), j.at("im").get<double>()));
    }
    if (j.contains("zeta")) {
        const json& arr = j.at("zeta");
        if (!arr.is_array()) throw ValidationError("'zeta' must be an array");
        Scalar acc;
        Scalar zp(Rational(1));
        for (const json& pair : arr) {
            if (!pair.is_array() || pair.size() != 2) {
                throw ValidationError("zeta coefficient must be a [re, im] pair");
            }
            GaussRat g(rational_from_json(pair.at(0)), rational_from_json(pair.at(1)));
            acc += Scalar(g) * zp;
            zp *= Scalar::zeta();
        }
        return acc;
    }
    throw ValidationError("unrecognized scalar encoding: " + j.dump());
}

json coef_to_json(const Coef& c) {
    if (c.is_scalar()) return scalar_to_json(c.scalar());
    json entries = json::object();
    for (const auto& [i, s] : c.vec().entries()) entries[std::to_string(i)] = scalar_to_json(s);
    json j;
    j["vec"] = entries;
    return j;
}

Coef coef_from_json(const json& j) {
    if (j.is_object() && j.contains("vec")) {
        Vec v;
        for (const auto& [key, val] : j.at("vec").items()) {
            v.set(std::stoi(key), scalar_from_json(val));
        }
        return Coef(v);
    }
    return Coef(scalar_from_json(j));
}

json monomial_to_json(const Monomial& m) {
    json j = json::object();
    for (const auto& [x, e] : m.exps()) {
        j[x.name()] = json::array({e.str(), m.log_deg(x)});
    }
    for (const auto& [x, d] : m.log_degs()) {
        if (!j.contains(x.name())) j[x.name()] = json::array({Rational(0).str(), d});
    }
    return j;
}

Monomial monomial_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("expected a monomial object, got " + j.dump());
    Monomial m;
    for (const auto& [key, val] : j.items()) {
        if (!val.is_array() || val.size() != 2) {
            throw ValidationError("monomial entry for '" + key + "' must be [exponent, log-degree]");
        }
        VarId x = VarId::of(key);
        m.set_exp(x, rational_from_json(val.at(0)));
        int d = val.at(1).get<int>();
        if (d < 0) throw ValidationError("negative log degree for '" + key + "'");
        m.set_log_deg(x, d);
    }
    return m;
}

json policy_to_json(const Policy& p) {
    json j = json::object();
    for (const auto& [x, vp] : p.vars()) {
        json v;
        if (vp.kind == VarPolicy::Kind::window) {
            v["kind"] = "window";
            v["lo"] = vp.lo.str();
            v["hi"] = vp.hi.str();
        } else {
            v["kind"] = "expansion";
            v["order"] = vp.order;
        }
        v["max_log"] = vp.max_log;
        j[x.name()] = v;
    }
    return j;
}

Policy policy_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("expected a policy object, got " + j.dump());
    Policy p;
    for (const auto& [key, val] : j.items()) {
        if (!val.is_object() || !val.contains("kind")) {
            throw ValidationError("policy entry for '" + key + "' must declare a kind");
        }
        std::string kind = val.at("kind").get<std::string>();
        VarPolicy vp;
        if (kind == "window") {
            vp = VarPolicy::window(rational_from_json(val.at("lo")), rational_from_json(val.at("hi")));
        } else if (kind == "expansion") {
            vp = VarPolicy::expansion(val.at("order").get<int>());
        } else {
            throw ValidationError("unknown policy kind '" + kind + "' for '" + key + "'");
        }
        if (val.contains("max_log")) vp.max_log = val.at("max_log").get<int>();
        p.with(VarId::of(key), vp);
    }
    return p;
}

json series_to_json(const Series& s) {
    json j;
    j["policy"] = policy_to_json(s.policy());
    json terms = json::array();
    for (const auto& [m, c] : s.terms()) {
        json t;
        t["m"] = monomial_to_json(m);
        t["c"] = coef_to_json(c);
        terms.push_back(t);
    }
    j["terms"] = terms;
    return j;
}

Series series_from_json(const json& j) {
    if (!j.is_object() || !j.contains("policy") || !j.contains("terms")) {
        throw ValidationError("series JSON must have 'policy' and 'terms'");
    }
    Series s(policy_from_json(j.at("policy")));
    for (const json& t : j.at("terms")) {
        if (!t.is_object() || !t.contains("m") || !t.contains("c")) {
            throw ValidationError("series term must have 'm' and 'c'");
        }
        s.set_term(monomial_from_json(t.at("m")), coef_from_json(t.at("c")));
    }
    return s;
}

json parse_checked(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

} // namespace jsonu

std::string series_to_json_string(const Series& s) { return jsonu::series_to_json(s).dump(); }

Series series_from_json_string(const std::string& text) {
    return jsonu::series_from_json(jsonu::parse_checked(text, "series"));
}

} // namespace logtensor
