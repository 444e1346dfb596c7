#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "gridsec/jacobian.hpp"

namespace gridsec {

class MeasuredGraph;

/// Ordered set of state-variable bus ids (never the reference).
using StateSet = std::vector<BusId>;

/// Undetectable injection a = H c, zero on every protected coordinate.
struct AttackVector {
    std::map<BusId, double> c;         // per state bus
    std::map<std::string, double> a;   // per meter
};

/// Rank condition for protection: securing P eliminates undetectable attacks
/// on D iff rank(H_P) = rank(H_P restricted to columns I \ D) + |D|.
bool is_protected(const Jacobian& jac, std::span<const int> protected_rows, const StateSet& d,
                  RankOptions opt = {});

/// Observable-subnetwork test: rank(H rows P, cols S) = |S| with S the
/// measured vertices minus the reference, which must itself be measured.
bool is_observable_subnetwork(const Jacobian& jac, const MeasuredGraph& mg,
                              std::span<const int> meters, RankOptions opt = {});

/// Picks |S| candidate meters whose rows restricted to the columns of S are
/// linearly independent. Candidates are visited in seed-shuffled order
/// (Fisher-Yates over a mt19937 stream), so distinct seeds explore distinct
/// basic measurement sets. Returns the chosen meter rows sorted ascending, or
/// nullopt when the candidates are rank deficient on S.
std::optional<std::vector<int>> basic_measurement_set(const Jacobian& jac,
                                                      std::span<const int> candidate_rows,
                                                      const StateSet& s, std::uint64_t seed,
                                                      RankOptions opt = {});

/// Null-space search: a c with a = Hc vanishing on all protected rows and
/// c_target = 1, or nullopt when no such vector exists (which coincides with
/// is_protected(jac, protected_rows, {target})).
std::optional<AttackVector> synthesize_attack(const Jacobian& jac,
                                              std::span<const int> protected_rows, BusId target,
                                              RankOptions opt = {});

struct BddResult {
    double r_clean;
    double r_attacked;
};

/// WLS estimate with identity covariance, then the l2 residual of z and z+a.
/// Throws std::runtime_error("unobservable, estimator undefined") when H is
/// rank deficient.
BddResult bdd_residual_check(const Jacobian& jac, std::span<const double> z,
                             std::span<const double> a, RankOptions opt = {});

/// Meter rows whose non-zero entries all lie in the columns of s: the meters
/// that measure only buses in s plus the reference.
std::vector<int> meters_within(const Jacobian& jac, const StateSet& s);

/// Columns of the Jacobian for a state set, ascending.
std::vector<int> state_columns(const Jacobian& jac, const StateSet& s);

}  // namespace gridsec
