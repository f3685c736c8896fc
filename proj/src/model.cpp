#include "circlesim/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace circlesim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// PeriodicCoefficient

PeriodicCoefficient PeriodicCoefficient::constant(double value) {
    return fourier(value, {}, {});
}

PeriodicCoefficient PeriodicCoefficient::fourier(double c0, std::vector<double> cos_coeff,
                                                 std::vector<double> sin_coeff) {
    if (cos_coeff.size() != sin_coeff.size()) {
        const std::size_t k = std::max(cos_coeff.size(), sin_coeff.size());
        cos_coeff.resize(k, 0.0);
        sin_coeff.resize(k, 0.0);
    }
    PeriodicCoefficient p;
    p.kind_ = CoeffKind::fourier;
    p.c0_ = c0;
    p.cos_coeff_ = std::move(cos_coeff);
    p.sin_coeff_ = std::move(sin_coeff);
    return p;
}

namespace {

// Cyclic tridiagonal solve (Sherman-Morrison) for the periodic cubic spline
// second derivatives. diag 4, off-diag 1, rhs r_i = 6 (v_{i+1} - 2v_i + v_{i-1}).
std::vector<double> periodic_spline_moments(const std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) {
        const double vm1 = v[(i + n - 1) % n];
        const double vp1 = v[(i + 1) % n];
        rhs[i] = 6.0 * (vp1 - 2.0 * v[i] + vm1);
    }
    auto solve_tridiag = [n](double first_diag, double last_diag, std::vector<double> b) {
        std::vector<double> diag(n, 4.0);
        diag[0] = first_diag;
        diag[n - 1] = last_diag;
        std::vector<double> c(n, 1.0);
        for (int i = 1; i < n; ++i) {
            const double w = 1.0 / diag[i - 1];
            diag[i] -= w * c[i - 1];
            b[i] -= w * b[i - 1];
        }
        b[n - 1] /= diag[n - 1];
        for (int i = n - 2; i >= 0; --i) b[i] = (b[i] - c[i] * b[i + 1]) / diag[i];
        return b;
    };
    // A = T + u v^T with u = (gamma, 0, ..., 1), v = (1, 0, ..., gamma') handling
    // the two corner entries; standard scaling with gamma = -4.
    const double gamma = -4.0;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = 1.0;
    std::vector<double> y = solve_tridiag(4.0 - gamma, 4.0 - 1.0 / gamma, rhs);
    std::vector<double> z = solve_tridiag(4.0 - gamma, 4.0 - 1.0 / gamma, u);
    const double vy = y[0] + y[n - 1] / gamma;
    const double vz = z[0] + z[n - 1] / gamma;
    const double factor = vy / (1.0 + vz);
    std::vector<double> m(n);
    for (int i = 0; i < n; ++i) m[i] = y[i] - factor * z[i];
    return m;
}

} // namespace

PeriodicCoefficient PeriodicCoefficient::tabulated(std::vector<double> values, int spline_order) {
    if (values.size() < 4) throw ModelError("tabulated coefficient needs at least 4 samples");
    if (spline_order != 1 && spline_order != 3)
        throw ModelError("spline_order must be 1 or 3");
    PeriodicCoefficient p;
    p.kind_ = CoeffKind::tabulated;
    p.values_ = std::move(values);
    p.spline_order_ = spline_order;
    if (spline_order == 3) {
        const int n = static_cast<int>(p.values_.size());
        const std::vector<double> m = periodic_spline_moments(p.values_);
        // On cell i with local t = n x - i in [0,1):
        //   f = a + b t + c t^2 + d t^3   (h = 1/n folded into the moments)
        p.cell_coeff_.resize(static_cast<std::size_t>(4 * n));
        for (int i = 0; i < n; ++i) {
            const double vi = p.values_[i];
            const double vj = p.values_[(i + 1) % n];
            const double mi = m[i];
            const double mj = m[(i + 1) % n];
            p.cell_coeff_[4 * i + 0] = vi;
            p.cell_coeff_[4 * i + 1] = (vj - vi) - (2.0 * mi + mj) / 6.0;
            p.cell_coeff_[4 * i + 2] = mi / 2.0;
            p.cell_coeff_[4 * i + 3] = (mj - mi) / 6.0;
        }
    }
    return p;
}

double PeriodicCoefficient::eval_fourier(double x) const {
    const int k_max = harmonics();
    if (k_max == 0) return c0_;
    const double u = vm::frac(x);
    double s1, c1;
    vm::sincos_2pi_frac(u, s1, c1);
    double acc = c0_;
    double sk = s1, ck = c1;
    for (int k = 0;;) {
        acc += cos_coeff_[k] * ck + sin_coeff_[k] * sk;
        if (++k == k_max) break;
        const double sn = sk * c1 + ck * s1;  // angle addition, matches SIMD path
        const double cn = ck * c1 - sk * s1;
        sk = sn;
        ck = cn;
    }
    return acc;
}

double PeriodicCoefficient::eval_table(double x) const {
    const int n = static_cast<int>(values_.size());
    double u = vm::frac(x);
    if (u >= 1.0) u = 0.0;
    const double scaled = u * static_cast<double>(n);
    double fi = std::floor(scaled);
    if (fi >= static_cast<double>(n)) fi = static_cast<double>(n - 1);
    const int i = static_cast<int>(fi);
    const double t = scaled - fi;
    if (spline_order_ == 1) {
        const double vi = values_[i];
        const double vj = values_[(i + 1) % n];
        return vi + t * (vj - vi);
    }
    const double* c = &cell_coeff_[static_cast<std::size_t>(4 * i)];
    return ((c[3] * t + c[2]) * t + c[1]) * t + c[0];
}

double PeriodicCoefficient::operator()(double x) const {
    return kind_ == CoeffKind::fourier ? eval_fourier(x) : eval_table(x);
}

bool PeriodicCoefficient::is_constant() const {
    if (kind_ != CoeffKind::fourier) return false;
    for (double a : cos_coeff_)
        if (a != 0.0) return false;
    for (double b : sin_coeff_)
        if (b != 0.0) return false;
    return true;
}

double PeriodicCoefficient::magnitude_bound() const {
    if (kind_ == CoeffKind::fourier) {
        double s = std::abs(c0_);
        for (std::size_t k = 0; k < cos_coeff_.size(); ++k)
            s += std::hypot(cos_coeff_[k], sin_coeff_[k]);
        return s;
    }
    double s = 0.0;
    for (double v : values_) s = std::max(s, std::abs(v));
    return s * (spline_order_ == 3 ? 1.25 : 1.0);  // cubic overshoot margin
}

// ---------------------------------------------------------------------------
// CircleDiffusionModel

namespace {
constexpr int kValidationGrid = 4096;
constexpr double kPeriodicityTol = 1e-12;

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

json coeff_to_json(const PeriodicCoefficient& p) {
    json j;
    if (p.kind() == CoeffKind::fourier) {
        j["type"] = "fourier";
        j["c0"] = p.constant_term();
        j["cos"] = p.cos_coeffs();
        j["sin"] = p.sin_coeffs();
    } else {
        j["type"] = "tabulated";
        j["values"] = p.table_values();
        j["spline_order"] = p.spline_order();
    }
    return j;
}

PeriodicCoefficient coeff_from_json(const json& j, const char* which) {
    if (!j.is_object()) throw ModelError(std::string(which) + ": expected an object");
    const std::string type = j.value("type", "fourier");
    if (type == "fourier") {
        std::vector<double> cs = j.value("cos", std::vector<double>{});
        std::vector<double> sn = j.value("sin", std::vector<double>{});
        if (!j.contains("c0")) throw ModelError(std::string(which) + ": fourier needs \"c0\"");
        return PeriodicCoefficient::fourier(j.at("c0").get<double>(), std::move(cs),
                                            std::move(sn));
    }
    if (type == "tabulated") {
        if (!j.contains("values"))
            throw ModelError(std::string(which) + ": tabulated needs \"values\"");
        return PeriodicCoefficient::tabulated(j.at("values").get<std::vector<double>>(),
                                              j.value("spline_order", 1));
    }
    throw ModelError(std::string(which) + ": unknown type \"" + type + "\"");
}

} // namespace

CircleDiffusionModel::CircleDiffusionModel(PeriodicCoefficient drift,
                                           PeriodicCoefficient diffusion)
    : drift_(std::move(drift)), diffusion_(std::move(diffusion)) {
    validate_and_finalize();
}

void CircleDiffusionModel::validate_and_finalize() {
    double smin = std::numeric_limits<double>::infinity();
    double smax = 0.0;
    for (int i = 0; i < kValidationGrid; ++i) {
        const double x = static_cast<double>(i) / kValidationGrid;
        const double s = diffusion_(x);
        if (!std::isfinite(s) || s <= 0.0)
            throw ModelError("diffusion coefficient must be strictly positive (fails at x=" +
                             std::to_string(x) + ")");
        smin = std::min(smin, s);
        smax = std::max(smax, s);
        if (drift_.kind() == CoeffKind::fourier || diffusion_.kind() == CoeffKind::fourier) {
            if (std::abs(drift_(x + 1.0) - drift_(x)) > kPeriodicityTol ||
                std::abs(diffusion_(x + 1.0) - diffusion_(x)) > kPeriodicityTol)
                throw ModelError("coefficient fails the periodicity check at x=" +
                                 std::to_string(x));
        }
        if (!std::isfinite(drift_(x)))
            throw ModelError("drift coefficient is not finite at x=" + std::to_string(x));
    }
    sigma_min_ = smin;
    sigma_max_ = smax;
    hash_ = fnv1a_hex(to_json_string());
}

std::string CircleDiffusionModel::to_json_string() const {
    json j;
    j["drift"] = coeff_to_json(drift_);
    j["diffusion"] = coeff_to_json(diffusion_);
    return j.dump();
}

CircleDiffusionModel CircleDiffusionModel::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelError(std::string("model JSON parse error: ") + e.what());
    }
    if (!j.contains("drift")) throw ModelError("model is missing \"drift\"");
    if (!j.contains("diffusion")) throw ModelError("model is missing \"diffusion\"");
    return CircleDiffusionModel(coeff_from_json(j.at("drift"), "drift"),
                                coeff_from_json(j.at("diffusion"), "diffusion"));
}

CircleDiffusionModel CircleDiffusionModel::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

CircleDiffusionModel make_constant_model(double b, double sigma) {
    return CircleDiffusionModel(PeriodicCoefficient::constant(b),
                                PeriodicCoefficient::constant(sigma));
}

CircleDiffusionModel make_sine_model() {
    return CircleDiffusionModel(PeriodicCoefficient::fourier(0.0, {0.0}, {1.0}),
                                PeriodicCoefficient::constant(1.0));
}

CircleDiffusionModel make_shifted_sine_model(double shift) {
    return CircleDiffusionModel(PeriodicCoefficient::fourier(shift, {0.0}, {1.0}),
                                PeriodicCoefficient::constant(1.0));
}

} // namespace circlesim
