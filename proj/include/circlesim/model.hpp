#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "circlesim/errors.hpp"
#include "circlesim/vecmath.hpp"

namespace circlesim {

enum class CoeffKind { fourier, tabulated };

/// One periodic coefficient function on [0,1). Two representations:
///  - trigonometric polynomial c0 + sum_k (a_k cos(2 pi k x) + b_k sin(2 pi k x))
///  - uniform samples with periodic spline interpolation (order 1 or 3)
/// Evaluation goes through vm::sincos_2pi_frac so the SIMD kernels can
/// reproduce it exactly.
class PeriodicCoefficient {
public:
    static PeriodicCoefficient constant(double value);
    static PeriodicCoefficient fourier(double c0, std::vector<double> cos_coeff,
                                       std::vector<double> sin_coeff);
    static PeriodicCoefficient tabulated(std::vector<double> values, int spline_order);

    double operator()(double x) const;

    CoeffKind kind() const { return kind_; }
    int harmonics() const { return static_cast<int>(cos_coeff_.size()); }
    double constant_term() const { return c0_; }
    const std::vector<double>& cos_coeffs() const { return cos_coeff_; }
    const std::vector<double>& sin_coeffs() const { return sin_coeff_; }
    const std::vector<double>& table_values() const { return values_; }
    int spline_order() const { return spline_order_; }
    /// Per-cell cubic coefficients (a,b,c,d), local variable t in [0,1);
    /// empty unless spline_order == 3.
    const std::vector<double>& cell_coeffs() const { return cell_coeff_; }

    bool is_constant() const;
    /// sup |f| bound from coefficients (exact for constants, an upper
    /// envelope for series, exact nodal max for tables).
    double magnitude_bound() const;

private:
    CoeffKind kind_ = CoeffKind::fourier;
    double c0_ = 0.0;
    std::vector<double> cos_coeff_;
    std::vector<double> sin_coeff_;
    std::vector<double> values_;
    int spline_order_ = 1;
    std::vector<double> cell_coeff_;  // 4 per cell when cubic

    double eval_fourier(double x) const;
    double eval_table(double x) const;
};

/// Periodic drift b and diffusion sigma on the unit circle; a = sigma^2.
/// The single source of every analytic quantity downstream.
class CircleDiffusionModel {
public:
    CircleDiffusionModel(PeriodicCoefficient drift, PeriodicCoefficient diffusion);

    double drift(double x) const { return drift_(x); }
    double sigma(double x) const { return diffusion_(x); }
    double diffusion_a(double x) const {
        const double s = diffusion_(x);
        return s * s;
    }

    const PeriodicCoefficient& drift_coeff() const { return drift_; }
    const PeriodicCoefficient& diffusion_coeff() const { return diffusion_; }

    double sigma_min() const { return sigma_min_; }
    double drift_bound() const { return drift_.magnitude_bound(); }
    double sigma_max() const { return sigma_max_; }

    /// FNV-1a digest of the canonical JSON form, as fixed-width hex.
    const std::string& hash() const { return hash_; }

    std::string to_json_string() const;
    static CircleDiffusionModel from_json_string(const std::string& text);
    static CircleDiffusionModel from_json_file(const std::string& path);

private:
    PeriodicCoefficient drift_;
    PeriodicCoefficient diffusion_;
    double sigma_min_ = 0.0;
    double sigma_max_ = 0.0;
    std::string hash_;

    void validate_and_finalize();
};

/// Convenience constructors for the canonical test models.
CircleDiffusionModel make_constant_model(double b, double sigma);
CircleDiffusionModel make_sine_model();                      // b = sin(2 pi x), sigma = 1
CircleDiffusionModel make_shifted_sine_model(double shift);  // b = shift + sin(2 pi x)

} // namespace circlesim
