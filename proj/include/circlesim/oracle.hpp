#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "circlesim/errors.hpp"
#include "circlesim/model.hpp"

namespace circlesim::oracle {

/// Continuous-time nearest-neighbor walk on Z/nZ: forward rates p_i
/// (i -> i+1) and backward rates q_i (i -> i-1). Every tested identity holds
/// exactly on this chain, making it the machine-precision ground truth for
/// the diffusion Monte Carlo.
struct RingChain {
    int n_sites = 0;
    std::vector<double> p;
    std::vector<double> q;

    void validate() const;
    /// gamma_d = log prod p_i/q_i (per full cycle).
    double affinity() const;

    std::string to_json_string() const;
    static RingChain from_json_string(const std::string& text);
    static RingChain from_json_file(const std::string& path);
};

/// Central-difference discretization of a circle diffusion on n sites:
/// p_i = a(x_i)/(2h^2) + b(x_i)/(2h), q_i = a(x_i)/(2h^2) - b(x_i)/(2h).
/// Throws when n is too coarse for positivity.
RingChain ring_from_model(const CircleDiffusionModel& model, int n_sites);

/// P(lifted chain reaches start + n before start - n), by a tridiagonal
/// solve on the lifted interval with absorbing ends.
double splitting_probability_exact(const RingChain& chain, int start);

struct ConditionalLaw {
    std::vector<double> time_grid;
    std::vector<double> cdf_plus;   // P(T <= u | forward cycle first)
    std::vector<double> cdf_minus;  // P(T <= u | backward cycle first)
    double p_plus = 0.0;            // splitting probability
    double max_gap = 0.0;           // sup_u |cdf_plus - cdf_minus|
};

/// Conditional first-passage laws via uniformization on the lifted absorbing
/// chain; truncation refined automatically to keep the Poisson tail below
/// 1e-13 of the mass.
ConditionalLaw conditional_first_passage_law(const RingChain& chain, int start,
                                             const std::vector<double>& time_grid);

struct WindingDistribution {
    int k_max = 0;
    std::vector<double> prob;  // index k + k_max, k in [-k_max, k_max]
    double truncated_mass = 0.0;

    double at(int k) const { return prob[static_cast<std::size_t>(k + k_max)]; }
};

/// Exact law of the net cycle count at time t on the winding-augmented state
/// space, truncated at |k| <= k_max + 2 guard levels; k_max is enlarged
/// automatically until the leaked mass is below 1e-12.
WindingDistribution winding_distribution_exact(const RingChain& chain, int start, double t,
                                               int k_max);

/// Scaled cumulant generating function of the net cycle count: the Perron
/// eigenvalue of the generator with rates tilted per cycle,
/// p_i e^{lambda/n}, q_i e^{-lambda/n}. Satisfies
/// Lambda(lambda) = Lambda(-lambda - gamma_d).
double tilted_scgf_exact(const RingChain& chain, double lambda);

/// Gillespie sampler of net cycle counts at time t (for oracle-vs-MC checks).
std::vector<int> simulate_winding_gillespie(const RingChain& chain, int start, double t,
                                            std::uint64_t seed, std::uint64_t n_paths);

} // namespace circlesim::oracle
