#include "netrel/hazard.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "netrel/network.hpp"  // ParseError / ValidationError

namespace netrel {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kEarthRadiusKm = 6371.0;

double deg2rad(double d) { return d * kPi / 180.0; }
}  // namespace

GmpeCoefficients load_gmpe(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("gmpe file: ") + e.what());
    }
    auto table = [&](const char* name) -> const nlohmann::json& {
        if (!j.contains(name))
            throw ParseError(std::string("gmpe file: missing table '") + name + "'");
        return j.at(name);
    };
    GmpeCoefficients c;
    try {
        const auto& g1 = table("magnitude_scaling");
        c.mag_const = g1.at("const").get<double>();
        c.mag_slope = g1.at("slope").get<double>();
        c.mag_ref = g1.at("mag_ref").get<double>();
        const auto& g2 = table("attenuation");
        c.atten_exponent = g2.at("exponent").get<double>();
        c.atten_offset_km = g2.at("offset_km").get<double>();
        const auto& g3 = table("anelastic");
        c.anelastic_per_km = g3.at("per_km").get<double>();
        const auto& g4 = table("site_amplification");
        c.site_slope = g4.at("slope").get<double>();
        c.vs30_ref = g4.at("vs30_ref").get<double>();
        const auto& g5 = table("basin_scaling");
        c.basin_slope = g5.at("slope").get<double>();
        const auto& mu = table("spectral_shape");
        c.shape_const = mu.at("const").get<double>();
        c.shape_lnT = mu.at("lnT").get<double>();
        c.shape_lnT2 = mu.at("lnT2").get<double>();
        c.shape_mag = mu.at("mag").get<double>();
        c.sigma_ln_pga = j.at("sigma_ln_pga").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("gmpe file: ") + e.what());
    }
    if (c.sigma_ln_pga < 0)
        throw ValidationError("sigma_ln_pga must be non-negative");
    return c;
}

double TruncExpMagnitude::pdf(double m) const {
    if (m < m_min || m > m_max) return 0.0;
    const double norm = 1.0 - std::exp(-beta * (m_max - m_min));
    return beta * std::exp(-beta * (m - m_min)) / norm;
}

double TruncExpMagnitude::cdf(double m) const {
    if (m <= m_min) return 0.0;
    if (m >= m_max) return 1.0;
    const double norm = 1.0 - std::exp(-beta * (m_max - m_min));
    return (1.0 - std::exp(-beta * (m - m_min))) / norm;
}

double TruncExpMagnitude::inverse_cdf(double u) const {
    const double norm = 1.0 - std::exp(-beta * (m_max - m_min));
    double m = m_min - std::log(1.0 - u * norm) / beta;
    return std::min(std::max(m, m_min), m_max);
}

TruncExpMagnitude load_magnitude_dist(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("magnitude dist: ") + e.what());
    }
    TruncExpMagnitude d{};
    try {
        d.beta = j.at("beta").get<double>();
        d.m_min = j.at("m_min").get<double>();
        d.m_max = j.at("m_max").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("magnitude dist: ") + e.what());
    }
    if (!(d.beta > 0) || !(d.m_min < d.m_max))
        throw ValidationError("magnitude dist requires beta > 0 and m_min < m_max");
    return d;
}

double source_distance(const Site& site, const EarthquakeEvent& event) {
    const double lat1 = deg2rad(site.lat);
    const double lat2 = deg2rad(event.epicenter_lat);
    const double dlat = lat2 - lat1;
    const double dlon = deg2rad(event.epicenter_lon - site.lon);
    const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

double median_pga(const GmpeCoefficients& c, double magnitude, double r_km, const Site& site) {
    if (r_km < 0) throw ValidationError("distance must be non-negative");
    const double ln_g1 = c.mag_const + c.mag_slope * (magnitude - c.mag_ref);
    const double ln_g2 = -c.atten_exponent * std::log(r_km + c.atten_offset_km);
    const double ln_g3 = -c.anelastic_per_km * r_km;
    const double ln_g4 = c.site_slope * std::log(c.vs30_ref / site.vs30);
    const double ln_g5 = c.basin_slope * site.basin_depth;
    return std::exp(ln_g1 + ln_g2 + ln_g3 + ln_g4 + ln_g5);
}

double spectral_accel(const GmpeCoefficients& c, double magnitude, double r_km,
                      const Site& site, double period_s) {
    if (period_s < 0.01 || period_s > 5.0)
        throw ValidationError("spectral period must be in 0.01-5 s");
    const double lnT = std::log(period_s);
    const double ln_mu = c.shape_const + c.shape_lnT * lnT + c.shape_lnT2 * lnT * lnT +
                         c.shape_mag * (magnitude - c.mag_ref);
    return median_pga(c, magnitude, r_km, site) * std::exp(ln_mu);
}

double sample_ground_motion(double median, double sigma_ln, Rng& rng) {
    if (!(median > 0)) throw ValidationError("ground-motion median must be positive");
    if (sigma_ln == 0.0) return median;
    return median * std::exp(sigma_ln * rng.normal());
}

double sample_magnitude_truncexp(const TruncExpMagnitude& dist, Rng& rng) {
    return dist.inverse_cdf(rng.uniform());
}

TruncExpMagnitude training_theta_dist() { return TruncExpMagnitude{15.0, 0.0, 1.5}; }

double sample_training_magnitude(Rng& rng) {
    return 8.0 - sample_magnitude_truncexp(training_theta_dist(), rng);
}

}  // namespace netrel
