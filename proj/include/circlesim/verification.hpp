#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace circlesim {

enum class Verdict { pass, fail, inconclusive };

const char* verdict_name(Verdict v);

/// Outcome of one theorem-level statistical check.
struct VerificationReport {
    std::string theorem_id;
    std::vector<double> statistics;   // headline numbers, meaning depends on the test
    double p_value = -1.0;            // < 0 when the test is margin-based
    double margin = -1.0;             // worst CI margin, < 0 when p-value-based
    double tolerance = 0.0;           // alpha or margin tolerance
    std::uint64_t sample_size = 0;
    double censored_fraction = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::string details;

    // provenance
    std::string model_hash;
    std::string config_digest;
    std::uint64_t master_seed = 0;

    // plot payload: rows of (x, value, ci_lo, ci_hi)
    std::string curve_name;
    std::vector<std::array<double, 4>> curve;
};

} // namespace circlesim
