#include "circlesim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "circlesim/rng.hpp"
#include "circlesim/vecmath.hpp"

namespace circlesim::oracle {

using nlohmann::json;

void RingChain::validate() const {
    if (n_sites < 3) throw OracleError("ring chain needs at least 3 sites");
    if (static_cast<int>(p.size()) != n_sites || static_cast<int>(q.size()) != n_sites)
        throw OracleError("rate vectors must have n_sites entries");
    for (int i = 0; i < n_sites; ++i)
        if (!(p[i] > 0.0) || !(q[i] > 0.0))
            throw OracleError("all rates must be strictly positive");
}

double RingChain::affinity() const {
    double g = 0.0;
    for (int i = 0; i < n_sites; ++i) g += std::log(p[i] / q[i]);
    return g;
}

std::string RingChain::to_json_string() const {
    json j;
    j["n_sites"] = n_sites;
    j["p"] = p;
    j["q"] = q;
    return j.dump();
}

RingChain RingChain::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw OracleError(std::string("chain JSON parse error: ") + e.what());
    }
    RingChain c;
    if (!j.contains("n_sites") || !j.contains("p") || !j.contains("q"))
        throw OracleError("chain JSON needs n_sites, p, q");
    c.n_sites = j.at("n_sites").get<int>();
    c.p = j.at("p").get<std::vector<double>>();
    c.q = j.at("q").get<std::vector<double>>();
    c.validate();
    return c;
}

RingChain RingChain::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw OracleError("cannot open chain file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

RingChain ring_from_model(const CircleDiffusionModel& model, int n_sites) {
    RingChain c;
    c.n_sites = n_sites;
    c.p.resize(n_sites);
    c.q.resize(n_sites);
    const double h = 1.0 / n_sites;
    for (int i = 0; i < n_sites; ++i) {
        const double x = static_cast<double>(i) * h;
        const double a = model.diffusion_a(x);
        const double b = model.drift(x);
        c.p[i] = a / (2.0 * h * h) + b / (2.0 * h);
        c.q[i] = a / (2.0 * h * h) - b / (2.0 * h);
        if (!(c.p[i] > 0.0) || !(c.q[i] > 0.0))
            throw OracleError("discretization too coarse: rate went nonpositive at site " +
                              std::to_string(i));
    }
    return c;
}

namespace {

inline int site_of(const RingChain& c, int start, int offset) {
    const int m = (start + offset) % c.n_sites;
    return m < 0 ? m + c.n_sites : m;
}

/// Poisson weights w_k = e^{-mu} mu^k / k! for k = 0..k_max, via logs.
std::vector<double> poisson_weights(double mu, int k_max) {
    std::vector<double> w(k_max + 1, 0.0);
    if (mu <= 0.0) {
        w[0] = 1.0;
        return w;
    }
    for (int k = 0; k <= k_max; ++k)
        w[k] = std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0));
    return w;
}

int poisson_truncation(double mu, double tail) {
    const int k = static_cast<int>(std::ceil(mu + 12.0 * std::sqrt(mu + 25.0) + 30.0));
    std::vector<double> w = poisson_weights(mu, k);
    double total = 0.0;
    for (double v : w) total += v;
    if (1.0 - total > tail) {
        const int k2 = 2 * k + 50;
        w = poisson_weights(mu, k2);
        total = 0.0;
        for (double v : w) total += v;
        if (1.0 - total > tail)
            throw OracleError("uniformization truncation failed to converge");
        return k2;
    }
    return k;
}

} // namespace

double splitting_probability_exact(const RingChain& chain, int start) {
    chain.validate();
    const int n = chain.n_sites;
    const int m = 2 * n - 1;  // offsets -n+1 .. n-1
    // (p_d + q_d) h_d = p_d h_{d+1} + q_d h_{d-1}; h(-n) = 0, h(n) = 1.
    std::vector<double> diag(m), upper(m), lower(m), rhs(m, 0.0);
    for (int d = -n + 1; d <= n - 1; ++d) {
        const int i = d + n - 1;
        const int s = site_of(chain, start, d);
        diag[i] = chain.p[s] + chain.q[s];
        upper[i] = -chain.p[s];
        lower[i] = -chain.q[s];
        if (d == n - 1) rhs[i] = chain.p[s];  // absorbing at +n contributes h = 1
    }
    // Thomas algorithm
    for (int i = 1; i < m; ++i) {
        const double piv = diag[i - 1];
        if (piv == 0.0) throw OracleError("singular system in splitting probability");
        const double w = lower[i] / piv;
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (diag[m - 1] == 0.0) throw OracleError("singular system in splitting probability");
    std::vector<double> h(m);
    h[m - 1] = rhs[m - 1] / diag[m - 1];
    for (int i = m - 2; i >= 0; --i) h[i] = (rhs[i] - upper[i] * h[i + 1]) / diag[i];
    return h[n - 1];  // offset 0
}

ConditionalLaw conditional_first_passage_law(const RingChain& chain, int start,
                                             const std::vector<double>& time_grid) {
    chain.validate();
    for (std::size_t i = 0; i < time_grid.size(); ++i) {
        if (time_grid[i] < 0.0 || (i > 0 && time_grid[i] <= time_grid[i - 1]))
            throw OracleError("time grid must be positive and increasing");
    }
    const int n = chain.n_sites;
    const int m = 2 * n - 1;
    double lam = 0.0;
    for (int d = -n + 1; d <= n - 1; ++d) {
        const int s = site_of(chain, start, d);
        lam = std::max(lam, chain.p[s] + chain.q[s]);
    }
    lam *= 1.05;

    // uniformized DTMC over transient offsets; absorbed mass tracked per side
    const double t_max = time_grid.empty() ? 0.0 : time_grid.back();
    const int k_max = t_max > 0.0 ? poisson_truncation(lam * t_max, 1e-13) : 0;

    std::vector<double> v(m, 0.0), nv(m, 0.0);
    v[n - 1] = 1.0;
    std::vector<double> abs_plus(k_max + 1, 0.0), abs_minus(k_max + 1, 0.0);
    double cum_plus = 0.0, cum_minus = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        abs_plus[k] = cum_plus;
        abs_minus[k] = cum_minus;
        if (k == k_max) break;
        std::fill(nv.begin(), nv.end(), 0.0);
        for (int i = 0; i < m; ++i) {
            const double mass = v[i];
            if (mass == 0.0) continue;
            const int d = i - (n - 1);
            const int s = site_of(chain, start, d);
            const double pp = chain.p[s] / lam;
            const double pq = chain.q[s] / lam;
            nv[i] += mass * (1.0 - pp - pq);
            if (d + 1 == n)
                cum_plus += mass * pp;
            else
                nv[i + 1] += mass * pp;
            if (d - 1 == -n)
                cum_minus += mass * pq;
            else
                nv[i - 1] += mass * pq;
        }
        std::swap(v, nv);
    }

    ConditionalLaw law;
    law.time_grid = time_grid;
    law.p_plus = splitting_probability_exact(chain, start);
    const double p_minus = 1.0 - law.p_plus;
    law.cdf_plus.resize(time_grid.size());
    law.cdf_minus.resize(time_grid.size());
    for (std::size_t g = 0; g < time_grid.size(); ++g) {
        const double mu = lam * time_grid[g];
        const std::vector<double> w = poisson_weights(mu, k_max);
        double fp = 0.0, fm = 0.0;
        for (int k = 0; k <= k_max; ++k) {
            fp += w[k] * abs_plus[k];
            fm += w[k] * abs_minus[k];
        }
        law.cdf_plus[g] = law.p_plus > 0.0 ? fp / law.p_plus : 0.0;
        law.cdf_minus[g] = p_minus > 0.0 ? fm / p_minus : 0.0;
        law.max_gap = std::max(law.max_gap, std::abs(law.cdf_plus[g] - law.cdf_minus[g]));
    }
    return law;
}

WindingDistribution winding_distribution_exact(const RingChain& chain, int start, double t,
                                               int k_max) {
    chain.validate();
    if (!(t >= 0.0)) throw OracleError("time must be nonnegative");
    const int n = chain.n_sites;
    const int width = 2 * n - 1;

    for (int attempt = 0; attempt < 6; ++attempt) {
        const int k_span = k_max + 2;  // guard levels
        const int levels = 2 * k_span + 1;
        const int total = levels * width;
        double lam = 0.0;
        for (int i = 0; i < n; ++i) lam = std::max(lam, chain.p[i] + chain.q[i]);
        lam *= 1.05;
        const int steps = t > 0.0 ? poisson_truncation(lam * t, 1e-13) : 0;
        const std::vector<double> w = poisson_weights(lam * t, steps);

        std::vector<double> v(total, 0.0), nv(total, 0.0), acc(total, 0.0);
        auto idx = [&](int k, int d) { return (k + k_span) * width + (d + n - 1); };
        v[idx(0, 0)] = 1.0;
        for (int step = 0; step <= steps; ++step) {
            for (int i = 0; i < total; ++i) acc[i] += w[step] * v[i];
            if (step == steps) break;
            std::fill(nv.begin(), nv.end(), 0.0);
            for (int k = -k_span; k <= k_span; ++k) {
                for (int d = -n + 1; d <= n - 1; ++d) {
                    const double mass = v[idx(k, d)];
                    if (mass == 0.0) continue;
                    const int s = site_of(chain, start, d);
                    const double pp = chain.p[s] / lam;
                    const double pq = chain.q[s] / lam;
                    nv[idx(k, d)] += mass * (1.0 - pp - pq);
                    if (d + 1 == n) {
                        if (k + 1 <= k_span) nv[idx(k + 1, 0)] += mass * pp;
                        // beyond truncation: mass leaks to the sink
                    } else {
                        nv[idx(k, d + 1)] += mass * pp;
                    }
                    if (d - 1 == -n) {
                        if (k - 1 >= -k_span) nv[idx(k - 1, 0)] += mass * pq;
                    } else {
                        nv[idx(k, d - 1)] += mass * pq;
                    }
                }
            }
            std::swap(v, nv);
        }

        WindingDistribution dist;
        dist.k_max = k_max;
        dist.prob.assign(2 * k_max + 1, 0.0);
        double represented = 0.0;
        for (int k = -k_max; k <= k_max; ++k) {
            double mass = 0.0;
            for (int d = -n + 1; d <= n - 1; ++d) mass += acc[idx(k, d)];
            dist.prob[static_cast<std::size_t>(k + k_max)] = mass;
            represented += mass;
        }
        dist.truncated_mass = 1.0 - represented;  // guard levels + leak
        if (dist.truncated_mass < 1e-12) return dist;
        k_max = 2 * k_max + 4;
    }
    throw OracleError("winding truncation did not converge; k_max too small for this horizon");
}

double tilted_scgf_exact(const RingChain& chain, double lambda) {
    chain.validate();
    const int n = chain.n_sites;
    if (n > 128) throw OracleError("tilted_scgf_exact: dense eigensolver capped at 128 sites");
    const double tilt = lambda / static_cast<double>(n);
    const double ep = std::exp(tilt);
    const double eq = std::exp(-tilt);
    // B = Q_lambda + c I is nonnegative, irreducible, primitive.
    double c = 0.0;
    for (int i = 0; i < n; ++i) c = std::max(c, chain.p[i] + chain.q[i]);
    c += 1.0;
    std::vector<double> B(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        B[static_cast<std::size_t>(i) * n + ((i + 1) % n)] = chain.p[i] * ep;
        B[static_cast<std::size_t>(i) * n + ((i + n - 1) % n)] = chain.q[i] * eq;
        B[static_cast<std::size_t>(i) * n + i] = c - chain.p[i] - chain.q[i];
    }

    auto matvec = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            const double* row = &B[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) s += row[j] * x[j];
            y[i] = s;
        }
    };

    // repeated squaring drives columns to the Perron direction
    std::vector<double> M = B, M2(B.size());
    const int squarings = 40 + static_cast<int>(std::ceil(std::log2(n + 1))) * 4;
    for (int s = 0; s < squarings; ++s) {
        double mx = 0.0;
        for (double v : M) mx = std::max(mx, v);
        if (!(mx > 0.0)) throw OracleError("eigensolver degenerated");
        const double inv = 1.0 / mx;
        for (double& v : M) v *= inv;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k)
                    acc += M[static_cast<std::size_t>(i) * n + k] *
                           M[static_cast<std::size_t>(k) * n + j];
                M2[static_cast<std::size_t>(i) * n + j] = acc;
            }
        std::swap(M, M2);
    }
    std::vector<double> v(n, 0.0), bv(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += M[static_cast<std::size_t>(i) * n + j];
        v[i] = s;
    }
    // Collatz-Wielandt bracket, tightened by a few extra power steps if needed
    for (int iter = 0; iter < 20000; ++iter) {
        matvec(v, bv);
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0, mx = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!(v[i] > 0.0)) throw OracleError("eigensolver lost positivity");
            const double r = bv[i] / v[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            mx = std::max(mx, bv[i]);
        }
        if (hi - lo <= 1e-13 * (std::abs(hi) + c)) return 0.5 * (lo + hi) - c;
        const double inv = 1.0 / mx;
        for (int i = 0; i < n; ++i) v[i] = bv[i] * inv;
    }
    throw OracleError("eigensolver did not converge");
}

std::vector<int> simulate_winding_gillespie(const RingChain& chain, int start, double t,
                                            std::uint64_t seed, std::uint64_t n_paths) {
    chain.validate();
    std::vector<int> windings(n_paths, 0);
    for (std::uint64_t path = 0; path < n_paths; ++path) {
        double clock = 0.0;
        int d = 0;
        int k = 0;
        std::uint64_t event = 0;
        while (true) {
            const int s = site_of(chain, start, d);
            const double rate = chain.p[s] + chain.q[s];
            const auto blk = philox_block(seed, RngDomain::gillespie, path, event++);
            double u1, u2;
            uniform_pair(blk, u1, u2);
            clock += -vm::log_pos(u1) / rate;
            if (clock > t) break;
            if (u2 < chain.p[s] / rate) {
                if (++d == chain.n_sites) {
                    d = 0;
                    ++k;
                }
            } else {
                if (--d == -chain.n_sites) {
                    d = 0;
                    --k;
                }
            }
        }
        windings[path] = k;
    }
    return windings;
}

} // namespace circlesim::oracle
