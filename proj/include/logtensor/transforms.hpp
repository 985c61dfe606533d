#pragma once

#include "logtensor/intertwiner.hpp"

namespace logtensor {

// The branch constant zeta_r = (2r+1) * i*pi attached to the branch integer
// r.  Both transforms below depend on r itself, not only on the numerical
// value exp(zeta_r) = -1: each log factor turns into zeta_r + log x, so the
// branch survives in the zeta-polynomial layer of the result's scalars.
Scalar branch_constant(int r);

// Source-swap transform on branch r:
//
//   (Omega_r Y)(w2, x) w1 = e^{x L(-1)} Y(w1, e^{(2r+1) i pi} x) w2,
//
// an operator of the transposed type (same target, source modules
// exchanged).  A power x^n picks up the phase e^{n zeta_r} -- an exact
// Gaussian rational when n is a half-integer, a complex double otherwise --
// and (log x)^k becomes (zeta_r + log x)^k.  The translation dressing stays
// inside the target window, so every stored coefficient of the result is
// fully determined.  Inverse: omega_transform(., -r-1).
LogIntertwiner omega_transform(const LogIntertwiner& y, int r);

// Contragredient transform on branch r: the operator from W1 x W3' to W2'
// defined against the dual pairings by
//
//   <(A_r Y)(w1, x) w3', w2> = <w3', Y(u_r(x) w1, 1/x) w2>,
//   u_r(x) = e^{x L(1)} e^{zeta_r L(0)} x^{-2 L(0)},
//
// where substituting 1/x maps x^n to x^{-n} and (log x)^m to (-log x)^m.
// The contragredient modules are built on demand unless supplied; supplying
// them lets several transformed operators share module identity (as the
// axiom checker's wiring requires).  A non-semisimple L(0) on the first
// source raises the log cap by its nilpotency depth.  Inverse:
// a_transform(., -r-1).
LogIntertwiner a_transform(const LogIntertwiner& y, int r,
                           std::shared_ptr<const GradedModule> w2c = nullptr,
                           std::shared_ptr<const GradedModule> w3c = nullptr);

} // namespace logtensor
