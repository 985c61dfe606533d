#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logtensor/linalg.hpp"
#include "logtensor/series.hpp"

namespace logtensor {

// One named basis vector of a weight-graded space.
struct BasisVector {
    std::string name;
    Rational weight;
    std::vector<long> label;  // abelian group label in Z^d (empty = trivial)
};

// Truncated element of the weight completion: one component per weight.
using CompletionElement = std::map<Rational, Vec>;

Vec project(const CompletionElement& c, const Rational& n);

struct GradingReport {
    bool pass = true;
    std::vector<std::string> violations;
    std::map<Rational, int> dims;  // per-weight dimensions within window
};

// Finite truncation of a weight-graded module with Jordan-block L(0), mode
// matrices for named generators, and the three small Virasoro operators.
// Immutable after validate(); all operations are const.
class GradedModule {
  public:
    struct GenInfo {
        Rational weight;
        std::vector<long> label;
        // L(1)v as a combination of other generators (empty = annihilated).
        std::vector<std::pair<Rational, std::string>> l1_image;
        bool is_conformal = false;
    };

    GradedModule(std::string name, std::vector<BasisVector> basis, Rational wmin, Rational wmax,
                 Rational central_charge);

    const std::string& name() const { return name_; }
    int dim() const { return static_cast<int>(basis_.size()); }
    const std::vector<BasisVector>& basis() const { return basis_; }
    const BasisVector& at(int i) const { return basis_[static_cast<std::size_t>(i)]; }
    int index_of(const std::string& vec_name) const;  // -1 when absent
    const Rational& wmin() const { return wmin_; }
    const Rational& wmax() const { return wmax_; }
    const Rational& central_charge() const { return c_; }

    const Rational& weight_of(int i) const { return basis_[static_cast<std::size_t>(i)].weight; }
    std::vector<int> weight_space(const Rational& w) const;
    std::vector<Rational> weights() const;  // distinct, ascending
    // Weight of a homogeneous vector; NotHomogeneous otherwise (zero -> nullopt).
    std::optional<Rational> homogeneous_weight(const Vec& v) const;

    void add_generator(const std::string& gen, GenInfo info);
    bool has_generator(const std::string& gen) const { return gens_.count(gen) != 0; }
    const GenInfo& generator(const std::string& gen) const;
    const std::map<std::string, GenInfo>& generators() const { return gens_; }

    void set_mode(const std::string& gen, const Rational& n, Mat m);
    bool has_mode(const std::string& gen, const Rational& n) const;
    const Mat& mode(const std::string& gen, const Rational& n) const;
    const std::map<std::pair<std::string, Rational>, Mat>& modes() const { return modes_; }
    // Weight shift of v_n: wt(v) - n - 1.
    Rational mode_shift(const std::string& gen, const Rational& n) const;

    void set_l(int which, Mat m);  // which in {-1, 0, 1}
    const Mat& l(int which) const;

    // Whether every weight touched by applying an operator of the given
    // weight shift to this source weight stays inside the window.
    bool shift_in_window(const Rational& src_weight, const Rational& shift) const;

    // Structural validation: shapes, weight/label shifts of every stored
    // matrix, L(0) block structure, Virasoro brackets on stored data.
    // Throws ValidationError / NotNilpotent / CommutationFailure.
    void validate() const;

    // Semisimple and nilpotent parts of L(0); checks nilpotence and that N
    // commutes with every stored mode where the window permits comparison.
    std::pair<Mat, Mat> split_l0() const;

    // x^{+-L(0)} w as a series in x with vector coefficients, w homogeneous.
    Series power_l0(const Vec& w, int sign, VarId x, const Policy& pol) const;

    // Matrix of v^o_n for a stored generator v.
    Mat opposite_mode(const std::string& gen, const Rational& n) const;

    GradedModule contragredient() const;

    GradingReport strong_grading_check() const;

    // Per-weight dimensions of W / span{columns of the given weight-homo-
    // geneous operators}; used with the u_{-1} matrices of a basis of V_+.
    std::map<Rational, int> quotient_dims(const std::vector<Mat>& ops) const;

  private:
    void check_mode_matrix(const std::string& what, const Mat& m, const Rational& shift,
                           const std::vector<long>& label_shift) const;

    std::string name_;
    std::vector<BasisVector> basis_;
    Rational wmin_, wmax_;
    Rational c_;
    std::map<std::string, GenInfo> gens_;
    std::map<std::pair<std::string, Rational>, Mat> modes_;
    Mat lm1_, l0_, l1_;
    std::map<std::string, int> index_;
};

} // namespace logtensor
