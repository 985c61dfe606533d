#pragma once

#include <memory>

#include "logtensor/intertwiner.hpp"
#include "logtensor/module.hpp"

namespace logtensor {

// Rank-one free-boson Fock module truncated at oscillator level N: basis
// states are oscillator partitions tensored with a nilpotent zero-mode slot
// (Jordan rank m), so a(0) = lambda + nu with nu^m = 0.  Weight of a state
// is lambda^2/2 plus its partition size, independent of the slot.
struct FockModule {
    std::shared_ptr<const GradedModule> module;
    Rational momentum;
    int rank = 1;
    int trunc = 0;
    // Parallel to module->basis(): (partition, descending; slot power).
    std::vector<std::pair<std::vector<long>, int>> states;

    int state_index(const std::vector<long>& partition, int slot) const;
};

// Vacuum module (momentum 0, rank 1) with conformal structure: generator
// "a" of weight one plus the conformal vector "omega" = a(-1)^2 vac / 2,
// central charge 1.  Every stored matrix passes GradedModule::validate().
FockModule build_voa(int trunc);

// Fock module of the given momentum and Jordan rank; label_den scales the
// rational momentum onto the integer group label (momentum * label_den must
// be integral).  Throws ScaleExceeded beyond desk scale (rank > 3, N > 8);
// rank 3 exists only to serve as the target of a (2,2) intertwiner.
FockModule build_fock(const Rational& momentum, int rank, int trunc, long label_den = 1);

// Module action of the vacuum algebra on a Fock module, as an intertwiner
// with first source V.  Exact within the weight windows.
LogIntertwiner module_action(const FockModule& voa, const FockModule& target);

// A coherent family: the three Fock modules of momenta lambda, mu and
// lambda+mu (ranks m1, m2, m1+m2-1), the genuine intertwiner between them,
// and the module actions needed by the axiom checks.
struct HeisenbergFamily {
    FockModule voa;
    FockModule f1, f2, f3;
    LogIntertwiner y;
    LogIntertwiner act1, act2, act3;
};

HeisenbergFamily build_family(const Rational& lambda, const Rational& mu, int m1, int m2,
                              int trunc);

// The normally ordered exponential intertwiner F1 x F2 -> F3 alone.
LogIntertwiner build_intertwiner(const FockModule& f1, const FockModule& f2,
                                 const FockModule& f3);

// Matrices of u_{-1} over a basis of the positive-weight part of V, acting
// on the target of the given module action; feeds quotient dimension counts.
std::vector<Mat> c1_generators(const FockModule& voa, const FockModule& target,
                               const LogIntertwiner& action);

} // namespace logtensor
