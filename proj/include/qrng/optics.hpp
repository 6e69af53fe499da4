#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qrng {

inline constexpr double speed_of_light = 2.99792458e8;  // m/s
inline constexpr double cmrr_max_db = 200.0;

/// Common-mode rejection ratio in decibels, clamped to [0, cmrr_max_db].
/// A perfectly balanced detector rejects the common-mode tone completely;
/// the clamp keeps the value finite and plot-friendly.
class CmrrDb {
public:
    static CmrrDb clamped(double db) {
        return CmrrDb(std::clamp(db, 0.0, cmrr_max_db));
    }
    static CmrrDb max() { return CmrrDb(cmrr_max_db); }

    double db() const noexcept { return db_; }

    friend bool operator==(const CmrrDb&, const CmrrDb&) = default;

private:
    explicit CmrrDb(double db) : db_(db) {}
    double db_;
};

struct OpticalPath {
    double delta_l = 0.0;  // path length difference, m (signed)
    double n_eff = 1.0;    // effective refractive index
    double f_cm = 0.0;     // common-mode frequency, Hz

    void validate() const {
        if (!(n_eff > 0.0)) throw std::invalid_argument("OpticalPath: n_eff must be > 0");
        if (!(f_cm >= 0.0)) throw std::invalid_argument("OpticalPath: f_cm must be >= 0");
    }
};

struct SplitConfig {
    double kappa = 0.5;  // power coupling coefficient, in [0,1]

    void validate() const {
        if (!(kappa >= 0.0 && kappa <= 1.0))
            throw std::invalid_argument("SplitConfig: kappa must lie in [0,1]");
    }
};

/// Spectral signal powers from the two-configuration CMRR measurement.
/// s_d already includes the doubling of the single-arm (0/50) power.
struct CmrrMeasurement {
    double s_d = 0.0;   // differential reference power (linear units)
    double s_cm = 0.0;  // balanced-configuration common-mode power

    /// Builds the measurement from the raw powers of the two detector
    /// configurations: one arm fully attenuated (0/50) and balanced (50/50).
    /// The 0/50 configuration sees only half the differential signal, so its
    /// power is doubled.
    static CmrrMeasurement from_arm_powers(double single_arm_power, double balanced_power) {
        if (!(single_arm_power >= 0.0) || !(balanced_power >= 0.0))
            throw std::invalid_argument("CmrrMeasurement: powers must be >= 0");
        return CmrrMeasurement{2.0 * single_arm_power, balanced_power};
    }

    void validate() const {
        if (!(s_d >= 0.0 && s_cm >= 0.0))
            throw std::invalid_argument("CmrrMeasurement: powers must be >= 0");
    }
};

/// Detector calibration: LO power to output-voltage variance, with a hard
/// saturation clamp on the quantum term.
struct DetectorModel {
    double g = 0.0;            // quantum-variance gain, V^2 per W of LO power
    double sigma_c_sq = 0.0;   // classical (electronic) noise variance, V^2
    double p_sat = 0.0;        // LO power where the photodiodes saturate, W
    double sigma_floor = 8.5e-3;  // output noise floor for tone experiments, V
    double p_ref = 0.0;        // calibration reference LO power, W

    /// Reference calibration: at p_ref = 100 mW (20 dBm) the total output
    /// variance is 995 mV^2 with a shot-noise clearance of 25.6 dB, and the
    /// photodiodes saturate right at the reference power.
    static DetectorModel calibrated() {
        constexpr double total_sq = 995e-6;  // V^2
        constexpr double snc_db = 25.6;
        const double r = std::pow(10.0, snc_db / 10.0);
        DetectorModel m;
        m.p_ref = 0.1;
        m.sigma_c_sq = total_sq / (1.0 + r);
        m.g = (total_sq - m.sigma_c_sq) / m.p_ref;
        m.p_sat = m.p_ref;
        m.sigma_floor = 8.5e-3;
        return m;
    }

    void validate() const {
        if (!(g > 0.0)) throw std::invalid_argument("DetectorModel: g must be > 0");
        if (!(sigma_c_sq > 0.0))
            throw std::invalid_argument("DetectorModel: sigma_c_sq must be > 0");
        if (!(p_sat > 0.0)) throw std::invalid_argument("DetectorModel: p_sat must be > 0");
        if (!(sigma_floor >= 0.0))
            throw std::invalid_argument("DetectorModel: sigma_floor must be >= 0");
    }
};

/// Phase accumulated over a path length difference:
/// delta_phi = 2*pi*f_cm*n_eff*delta_L / c.  Sign follows delta_L.
inline double phase_from_path_difference(const OpticalPath& path) {
    path.validate();
    return 2.0 * std::numbers::pi * path.f_cm * path.n_eff * path.delta_l / speed_of_light;
}

/// CMRR from path length imbalance: -10*log10(|sin(delta_phi/2)|).
inline CmrrDb cmrr_path(double delta_phi) {
    const double s = std::fabs(std::sin(delta_phi / 2.0));
    if (s == 0.0) return CmrrDb::max();
    return CmrrDb::clamped(-10.0 * std::log10(s));
}

/// CMRR from splitting-ratio imbalance: -10*log10(|2*kappa - 1|).
inline CmrrDb cmrr_split(const SplitConfig& cfg) {
    cfg.validate();
    const double imbalance = std::fabs(2.0 * cfg.kappa - 1.0);
    if (imbalance == 0.0) return CmrrDb::max();
    return CmrrDb::clamped(-10.0 * std::log10(imbalance));
}

/// Measured CMRR: 10*log10(S_d/S_cm) over the two detector configurations.
inline CmrrDb cmrr_measured(const CmrrMeasurement& m) {
    m.validate();
    if (m.s_d == 0.0)
        throw std::invalid_argument("cmrr_measured: no differential reference signal");
    if (m.s_cm == 0.0) return CmrrDb::max();
    return CmrrDb::clamped(10.0 * std::log10(m.s_d / m.s_cm));
}

struct DetectorVariances {
    double sigma_q_sq = 0.0;      // quantum (shot) noise variance, V^2
    double sigma_c_sq = 0.0;      // classical noise variance, V^2
    double sigma_total_sq = 0.0;  // V^2
    double snc_db = 0.0;          // shot-noise clearance; -inf at zero LO power
};

/// Linear detector model with hard saturation: sigma_q^2 = g * min(P, p_sat).
inline DetectorVariances detector_variances(double lo_power, const DetectorModel& model) {
    model.validate();
    if (!(lo_power >= 0.0))
        throw std::invalid_argument("detector_variances: lo_power must be >= 0");
    DetectorVariances v;
    v.sigma_q_sq = model.g * std::min(lo_power, model.p_sat);
    v.sigma_c_sq = model.sigma_c_sq;
    v.sigma_total_sq = v.sigma_q_sq + v.sigma_c_sq;
    v.snc_db = lo_power == 0.0 ? -std::numeric_limits<double>::infinity()
                               : 10.0 * std::log10(v.sigma_q_sq / v.sigma_c_sq);
    return v;
}

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

}  // namespace qrng
