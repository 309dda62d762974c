#pragma once
#ifndef SDLM_MODEL_HPP
#define SDLM_MODEL_HPP

// Domain types shared by every part of the library: the observation time grid,
// zone geometry, panel data, static parameters of the joint model, priors, and
// the single-zone harmonic observation row.

#include "sdlm/error.hpp"
#include "sdlm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sdlm {

// ---------------------------------------------------------------------------
// Time grid

/// Observation times t_1 < ... < t_n together with the origin t_0 of the
/// initial state. gap_scales()[i]^2 is the elapsed time since the previous
/// grid point and scales the system noise of step i.
class TimeGrid {
public:
    TimeGrid() = default;

    /// Origin defaults to times[0] minus the median inter-observation gap
    /// (minus 1 when only one time is given).
    static TimeGrid from_times(std::vector<double> times, std::optional<double> origin = std::nullopt) {
        if (times.empty()) throw ValidationError("time grid is empty");
        for (double t : times)
            if (!std::isfinite(t)) throw ValidationError("time grid contains a non-finite time");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw ValidationError("times must be strictly increasing (index " + std::to_string(i) + ")");
        TimeGrid g;
        g.origin_ = origin ? *origin : times.front() - median_gap(times);
        if (!(g.origin_ < times.front())) throw ValidationError("origin time must precede the first observation time");
        g.times_ = std::move(times);
        g.gap_scales_.resize(g.times_.size());
        double prev = g.origin_;
        for (std::size_t i = 0; i < g.times_.size(); ++i) {
            g.gap_scales_[i] = std::sqrt(g.times_[i] - prev);
            prev = g.times_[i];
        }
        return g;
    }

    /// Monthly grid start, start+1, ..., start+n-1.
    static TimeGrid regular(std::size_t n, double start = 1.0, double step = 1.0) {
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = start + step * static_cast<double>(i);
        return from_times(std::move(t), start - step);
    }

    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<double>& gap_scales() const noexcept { return gap_scales_; }
    double origin_time() const noexcept { return origin_; }
    std::size_t size() const noexcept { return times_.size(); }

    double gap_squared(std::size_t i) const { return gap_scales_[i] * gap_scales_[i]; }

    /// First `n` times, same origin.
    TimeGrid head(std::size_t n) const {
        return from_times(std::vector<double>(times_.begin(), times_.begin() + static_cast<long>(n)), origin_);
    }

    /// The last `k` times as a continuation grid whose origin is the time
    /// preceding them.
    TimeGrid tail(std::size_t k) const {
        const std::size_t start = times_.size() - k;
        const double origin = start == 0 ? origin_ : times_[start - 1];
        return from_times(std::vector<double>(times_.begin() + static_cast<long>(start), times_.end()), origin);
    }

    /// k further times continuing this grid at its median spacing.
    TimeGrid extension(std::size_t k) const {
        std::vector<double> full = times_;
        full.insert(full.begin(), origin_);
        const double step = median_gap(full);
        std::vector<double> t(k);
        for (std::size_t i = 0; i < k; ++i) t[i] = times_.back() + step * static_cast<double>(i + 1);
        return from_times(std::move(t), times_.back());
    }

private:
    static double median_gap(const std::vector<double>& t) {
        if (t.size() < 2) return 1.0;
        std::vector<double> gaps(t.size() - 1);
        for (std::size_t i = 1; i < t.size(); ++i) gaps[i - 1] = t[i] - t[i - 1];
        std::sort(gaps.begin(), gaps.end());
        const std::size_t m = gaps.size() / 2;
        return gaps.size() % 2 ? gaps[m] : 0.5 * (gaps[m - 1] + gaps[m]);
    }

    std::vector<double> times_;
    std::vector<double> gap_scales_;
    double origin_ = 0.0;
};

// ---------------------------------------------------------------------------
// Zone geometry

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle (haversine) distance in km between two (lon, lat) points in degrees.
inline double great_circle_km(double lon1, double lat1, double lon2, double lat2) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double dlat = (lat2 - lat1) * deg;
    const double dlon = (lon2 - lon1) * deg;
    const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1 * deg) * std::cos(lat2 * deg) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

struct Coordinate {
    double lon = 0.0;
    double lat = 0.0;
};

class ZoneGeometry {
public:
    ZoneGeometry() = default;

    static ZoneGeometry from_coordinates(std::vector<std::string> ids, std::vector<Coordinate> coords) {
        if (ids.size() != coords.size()) throw ValidationError("zone id count does not match coordinate count");
        const std::size_t n = ids.size();
        Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dij = great_circle_km(coords[i].lon, coords[i].lat, coords[j].lon, coords[j].lat);
                d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dij;
                d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = dij;
            }
        ZoneGeometry g;
        g.ids_ = std::move(ids);
        g.coords_ = std::move(coords);
        g.distances_ = std::move(d);
        g.check();
        return g;
    }

    static ZoneGeometry from_distances(std::vector<std::string> ids, Matrix distances) {
        ZoneGeometry g;
        g.ids_ = std::move(ids);
        g.distances_ = std::move(distances);
        g.check();
        return g;
    }

    /// Zones 1..n evenly spaced along a line, `spacing_km` apart.
    static ZoneGeometry line(std::size_t n, double spacing_km) {
        Matrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < d.rows(); ++i)
            for (Eigen::Index j = 0; j < d.cols(); ++j) d(i, j) = spacing_km * std::abs(static_cast<double>(i - j));
        return from_distances(default_ids(n), std::move(d));
    }

    static std::vector<std::string> default_ids(std::size_t n) {
        std::vector<std::string> ids(n);
        for (std::size_t i = 0; i < n; ++i) ids[i] = "zone_" + std::to_string(i + 1);
        return ids;
    }

    const std::vector<std::string>& zone_ids() const noexcept { return ids_; }
    const std::optional<std::vector<Coordinate>>& coordinates() const noexcept { return coords_; }
    const Matrix& distances() const noexcept { return distances_; }
    std::size_t size() const noexcept { return ids_.size(); }

    /// Geometry with zones reordered so that new zone i is old zone perm[i].
    ZoneGeometry permuted(const std::vector<std::size_t>& perm) const {
        ZoneGeometry g;
        g.ids_.resize(perm.size());
        g.distances_.resize(static_cast<Eigen::Index>(perm.size()), static_cast<Eigen::Index>(perm.size()));
        for (std::size_t i = 0; i < perm.size(); ++i) {
            g.ids_[i] = ids_[perm[i]];
            for (std::size_t j = 0; j < perm.size(); ++j)
                g.distances_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    distances_(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j]));
        }
        if (coords_) {
            std::vector<Coordinate> c(perm.size());
            for (std::size_t i = 0; i < perm.size(); ++i) c[i] = (*coords_)[perm[i]];
            g.coords_ = std::move(c);
        }
        return g;
    }

    /// Every violated invariant, empty when valid.
    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        const auto n = static_cast<Eigen::Index>(ids_.size());
        if (distances_.rows() != n || distances_.cols() != n) {
            v.push_back("distance matrix is " + std::to_string(distances_.rows()) + "x" +
                        std::to_string(distances_.cols()) + " but there are " + std::to_string(n) + " zones");
            return v;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (distances_(i, i) != 0.0) v.push_back("distance matrix has a non-zero diagonal entry");
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!std::isfinite(distances_(i, j)) || distances_(i, j) < 0.0)
                    v.push_back("distance matrix has a negative or non-finite entry");
                if (distances_(i, j) != distances_(j, i)) v.push_back("asymmetric distance matrix");
            }
        }
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }

private:
    void check() const {
        auto v = violations();
        if (!v.empty()) throw ValidationError(std::move(v));
    }

    std::vector<std::string> ids_;
    std::optional<std::vector<Coordinate>> coords_;
    Matrix distances_;
};

// ---------------------------------------------------------------------------
// Panel data

/// n x n_z rates on a time grid. Entries with observed == false carry no
/// information; whatever is stored there is never read.
struct PanelData {
    TimeGrid grid;
    std::vector<std::string> zone_ids;
    Matrix values;
    BoolMatrix observed;

    std::size_t n_times() const noexcept { return grid.size(); }
    std::size_t n_zones() const noexcept { return zone_ids.size(); }

    std::size_t observed_count() const { return static_cast<std::size_t>(observed.count()); }

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        const auto n = static_cast<Eigen::Index>(grid.size());
        const auto nz = static_cast<Eigen::Index>(zone_ids.size());
        if (values.rows() != n || values.cols() != nz || observed.rows() != n || observed.cols() != nz) {
            v.push_back("panel shape does not match " + std::to_string(n) + " times x " + std::to_string(nz) + " zones");
            return v;
        }
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < nz; ++j)
                if (observed(i, j) && !std::isfinite(values(i, j))) {
                    v.push_back("observed panel value at row " + std::to_string(i + 1) + ", zone " +
                                zone_ids[static_cast<std::size_t>(j)] + " is not finite");
                }
        return v;
    }

    /// Single-zone panel for column j.
    PanelData column(std::size_t j) const {
        PanelData p;
        p.grid = grid;
        p.zone_ids = {zone_ids[j]};
        p.values = values.col(static_cast<Eigen::Index>(j));
        p.observed = observed.col(static_cast<Eigen::Index>(j));
        return p;
    }

    /// First `n` time points.
    PanelData head(std::size_t n) const {
        PanelData p;
        p.grid = grid.head(n);
        p.zone_ids = zone_ids;
        p.values = values.topRows(static_cast<Eigen::Index>(n));
        p.observed = observed.topRows(static_cast<Eigen::Index>(n));
        return p;
    }

    /// Last `k` time points with their own continuation grid.
    PanelData tail(std::size_t k) const {
        PanelData p;
        p.grid = grid.tail(k);
        p.zone_ids = zone_ids;
        p.values = values.bottomRows(static_cast<Eigen::Index>(k));
        p.observed = observed.bottomRows(static_cast<Eigen::Index>(k));
        return p;
    }

    PanelData permuted(const std::vector<std::size_t>& perm) const {
        PanelData p;
        p.grid = grid;
        p.zone_ids.resize(perm.size());
        p.values.resize(values.rows(), static_cast<Eigen::Index>(perm.size()));
        p.observed.resize(observed.rows(), static_cast<Eigen::Index>(perm.size()));
        for (std::size_t j = 0; j < perm.size(); ++j) {
            p.zone_ids[j] = zone_ids[perm[j]];
            p.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(perm[j]));
            p.observed.col(static_cast<Eigen::Index>(j)) = observed.col(static_cast<Eigen::Index>(perm[j]));
        }
        return p;
    }
};

// ---------------------------------------------------------------------------
// Harmonic observation structure

struct HarmonicConfig {
    double period = 12.0;
};

/// (sin(2πt/P), cos(2πt/P), 1): the single-zone observation row at time t.
inline Eigen::RowVector3d observation_row(double t, const HarmonicConfig& config) {
    const double w = 2.0 * std::numbers::pi * t / config.period;
    return {std::sin(w), std::cos(w), 1.0};
}

/// θ1 sin(2πt/P) + θ2 cos(2πt/P).
inline double harmonic_term(double t, double theta1, double theta2, const HarmonicConfig& config) {
    const double w = 2.0 * std::numbers::pi * t / config.period;
    return theta1 * std::sin(w) + theta2 * std::cos(w);
}

struct SingleZoneState {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta3 = 0.0;
};

// ---------------------------------------------------------------------------
// Static parameters and priors

enum class KernelForm { exponential, squared_exponential };

/// Options fixed for a whole analysis.
struct ModelOptions {
    HarmonicConfig harmonic;
    KernelForm kernel = KernelForm::exponential;
};

/// σ is the marginal standard deviation, φ the inverse length scale per km.
struct KernelParams {
    double sigma = 1.0;
    double phi = 1.0;
};

/// Static parameters ψ of the joint model plus the initial level distribution.
struct JointStaticParams {
    Vector obs_var;
    Vector sys_var;
    Vector theta1;
    Vector theta2;
    KernelParams eta1;
    KernelParams eta2;
    KernelParams eta3;
    Vector init_mean;
    Matrix init_var;

    std::size_t n_zones() const noexcept { return static_cast<std::size_t>(obs_var.size()); }

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        const auto nz = obs_var.size();
        auto sized = [&](const auto& x, const char* name) {
            if (x.size() != nz) v.push_back(std::string(name) + " has " + std::to_string(x.size()) + " entries, expected " + std::to_string(nz));
        };
        sized(sys_var, "sys_var");
        sized(theta1, "theta1");
        sized(theta2, "theta2");
        sized(init_mean, "init_mean");
        if (init_var.rows() != nz || init_var.cols() != nz) v.push_back("init_var is not n_z x n_z");
        for (Eigen::Index j = 0; j < obs_var.size(); ++j)
            if (!(obs_var(j) > 0.0) || !std::isfinite(obs_var(j)))
                v.push_back("non-positive variance: V^" + std::to_string(j + 1));
        for (Eigen::Index j = 0; j < sys_var.size(); ++j)
            if (!(sys_var(j) > 0.0) || !std::isfinite(sys_var(j)))
                v.push_back("non-positive variance: W^" + std::to_string(j + 1));
        if (!theta1.allFinite() || !theta2.allFinite() || !init_mean.allFinite())
            v.push_back("non-finite harmonic coefficient or initial mean");
        const KernelParams* etas[] = {&eta1, &eta2, &eta3};
        for (int k = 0; k < 3; ++k) {
            if (!(etas[k]->sigma > 0.0) || !std::isfinite(etas[k]->sigma))
                v.push_back("non-positive kernel sigma_" + std::to_string(k + 1));
            if (!(etas[k]->phi > 0.0) || !std::isfinite(etas[k]->phi))
                v.push_back("non-positive kernel phi_" + std::to_string(k + 1));
        }
        if (init_var.rows() == nz && init_var.cols() == nz && nz > 0) {
            if ((init_var - init_var.transpose()).cwiseAbs().maxCoeff() > 0.0)
                v.push_back("init_var is not symmetric");
            else if (Eigen::LLT<Matrix>(init_var).info() != Eigen::Success)
                v.push_back("init_var is not positive definite");
        }
        return v;
    }
};

struct PriorSpec {
    double precision_shape = 0.1;
    double precision_rate = 0.1;
    double log_sigma_mean = std::log(0.1);
    double log_sigma_sd = std::sqrt(0.1);
    double log_phi_mean = std::log(0.1);
    double log_phi_sd = std::sqrt(0.1);
    double gp_mean1 = 1.5;
    double gp_mean2 = 1.5;
    double level_init_mean = 6.0;
    double level_init_var = 20.0;

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        if (!(precision_shape > 0.0)) v.push_back("prior precision_shape must be positive");
        if (!(precision_rate > 0.0)) v.push_back("prior precision_rate must be positive");
        if (!(log_sigma_sd > 0.0)) v.push_back("prior log_sigma_sd must be positive");
        if (!(log_phi_sd > 0.0)) v.push_back("prior log_phi_sd must be positive");
        if (!(level_init_var > 0.0)) v.push_back("prior level_init_var must be positive");
        if (!std::isfinite(log_sigma_mean) || !std::isfinite(log_phi_mean) || !std::isfinite(gp_mean1) ||
            !std::isfinite(gp_mean2) || !std::isfinite(level_init_mean))
            v.push_back("prior location parameters must be finite");
        return v;
    }
};

/// Initial level distribution θ_{3,t0} ~ N(mean·1, var·I) implied by the priors.
inline void set_initial_level(JointStaticParams& p, const PriorSpec& priors) {
    const auto nz = p.obs_var.size();
    p.init_mean = Vector::Constant(nz, priors.level_init_mean);
    p.init_var = priors.level_init_var * Matrix::Identity(nz, nz);
}

/// Validated, immutable bundle of a joint model and its data.
class ValidatedModel {
public:
    const JointStaticParams& params() const noexcept { return params_; }
    const ZoneGeometry& geometry() const noexcept { return geometry_; }
    const PanelData& panel() const noexcept { return panel_; }

private:
    friend ValidatedModel validate_joint_spec(JointStaticParams, ZoneGeometry, PanelData);
    ValidatedModel(JointStaticParams p, ZoneGeometry g, PanelData d)
        : params_(std::move(p)), geometry_(std::move(g)), panel_(std::move(d)) {}

    JointStaticParams params_;
    ZoneGeometry geometry_;
    PanelData panel_;
};

/// Checks every invariant of the three inputs together and throws a
/// ValidationError listing all violations found.
inline ValidatedModel validate_joint_spec(JointStaticParams params, ZoneGeometry geometry, PanelData panel) {
    std::vector<std::string> v = params.violations();
    for (auto& s : geometry.violations()) v.push_back(std::move(s));
    const std::size_t nz = params.n_zones();
    if (geometry.size() != nz)
        v.push_back("dimension mismatch: geometry has " + std::to_string(geometry.size()) + " zones, parameters have " +
                    std::to_string(nz));
    if (panel.n_zones() != nz)
        v.push_back("dimension mismatch: panel has " + std::to_string(panel.n_zones()) + " zone columns, parameters have " +
                    std::to_string(nz));
    for (auto& s : panel.violations()) v.push_back(std::move(s));
    if (!v.empty()) throw ValidationError(std::move(v));
    return ValidatedModel(std::move(params), std::move(geometry), std::move(panel));
}

} // namespace sdlm

#endif
