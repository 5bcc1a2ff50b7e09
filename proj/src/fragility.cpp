#include "netrel/fragility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace netrel {

DamageState damage_state_from_string(const std::string& s) {
    if (s == "slight") return DamageState::slight;
    if (s == "moderate") return DamageState::moderate;
    if (s == "extensive") return DamageState::extensive;
    if (s == "complete") return DamageState::complete;
    throw ParseError("unknown damage state '" + s + "'");
}

ImKind im_kind_from_string(const std::string& s) {
    if (s == "pga") return ImKind::pga;
    if (s == "sa_0_3") return ImKind::sa_0_3;
    if (s == "sa_1_0") return ImKind::sa_1_0;
    throw ParseError("unknown IM kind '" + s + "'");
}

std::optional<double> IntensityMeasures::get(ImKind kind) const {
    switch (kind) {
        case ImKind::pga: return pga;
        case ImKind::sa_0_3: return sa_0_3;
        case ImKind::sa_1_0: return sa_1_0;
    }
    return std::nullopt;
}

const FragilityCurve& Bridge::curve(DamageState ds) const {
    return curves.at(static_cast<size_t>(ds));
}

FragilityTable load_fragility_table(const std::string& text) {
    FragilityTable table;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("fragility table: empty file");
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        std::string cls, ds, im, median_s, beta_s;
        if (!std::getline(row, cls, ',') || !std::getline(row, ds, ',') ||
            !std::getline(row, im, ',') || !std::getline(row, median_s, ',') ||
            !std::getline(row, beta_s))
            throw ParseError("fragility table: malformed line " + std::to_string(lineno));
        FragilityCurve curve;
        curve.damage_state = damage_state_from_string(ds);
        curve.im_kind = im_kind_from_string(im);
        try {
            curve.median_im = std::stod(median_s);
            curve.beta_ln = std::stod(beta_s);
        } catch (const std::exception&) {
            throw ParseError("fragility table: bad number on line " + std::to_string(lineno));
        }
        if (!(curve.median_im > 0) || !(curve.beta_ln > 0))
            throw ValidationError("fragility table: median and beta must be positive (line " +
                                  std::to_string(lineno) + ")");
        table[cls].push_back(curve);
    }
    for (auto& [cls, curves] : table) {
        if (curves.size() != 4)
            throw ValidationError("fragility class '" + cls + "' must define all four damage states");
        std::sort(curves.begin(), curves.end(), [](const auto& a, const auto& b) {
            return a.damage_state < b.damage_state;
        });
        for (size_t i = 0; i < 4; ++i) {
            if (curves[i].damage_state != static_cast<DamageState>(i))
                throw ValidationError("fragility class '" + cls + "' repeats a damage state");
            if (i > 0 && curves[i].median_im < curves[i - 1].median_im)
                throw ValidationError("fragility class '" + cls +
                                      "': medians must be non-decreasing with severity");
        }
    }
    return table;
}

std::vector<Bridge> load_bridges(const std::string& text, const FragilityTable& table) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bridge inventory: ") + e.what());
    }
    std::vector<Bridge> bridges;
    try {
        for (const auto& jb : j.at("bridges")) {
            Bridge b;
            b.id = jb.at("id").get<int>();
            b.site.lat = jb.at("lat").get<double>();
            b.site.lon = jb.at("lon").get<double>();
            b.bridge_class = jb.at("class").get<std::string>();
            b.site.vs30 = jb.at("vs30").get<double>();
            b.site.basin_depth = jb.at("basin_depth").get<double>();
            if (jb.contains("soil_class")) b.site.soil_class = jb.at("soil_class").get<std::string>();
            auto it = table.find(b.bridge_class);
            if (it == table.end())
                throw ValidationError("bridge " + std::to_string(b.id) +
                                      " references unknown fragility class '" + b.bridge_class + "'");
            b.curves = it->second;
            if (b.site.lat < -90 || b.site.lat > 90 || b.site.lon < -180 || b.site.lon > 180)
                throw ValidationError("bridge " + std::to_string(b.id) + ": coordinates out of range");
            bridges.push_back(std::move(b));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bridge inventory: ") + e.what());
    }
    return bridges;
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double damage_exceedance_prob(const FragilityCurve& curve, double im) {
    if (!(im > 0)) throw ValidationError("intensity measure must be positive");
    return standard_normal_cdf(std::log(im / curve.median_im) / curve.beta_ln);
}

double bridge_survival_prob(const Bridge& bridge, const IntensityMeasures& ims) {
    const FragilityCurve& curve = bridge.curve(DamageState::extensive);
    auto im = ims.get(curve.im_kind);
    if (!im)
        throw ValidationError("bridge " + std::to_string(bridge.id) +
                              ": required intensity measure missing");
    return 1.0 - damage_exceedance_prob(curve, *im);
}

std::vector<double> roadway_survival_probs(
    const TransportNetwork& net, const std::unordered_map<int, double>& bridge_survivals) {
    std::vector<double> probs(net.link_count(), 1.0);
    for (const Roadway& rw : net.links()) {
        double log_sum = 0.0;
        bool zero = false;
        for (int bid : rw.bridge_ids) {
            auto it = bridge_survivals.find(bid);
            if (it == bridge_survivals.end())
                throw ValidationError("no survival probability for bridge " + std::to_string(bid));
            const double p = it->second;
            if (p < 0 || p > 1)
                throw ValidationError("bridge survival probability outside [0,1]");
            if (p == 0.0) {
                zero = true;
                break;
            }
            log_sum += std::log(p);
        }
        probs[rw.id] = zero ? 0.0 : std::exp(log_sum);
    }
    return probs;
}

}  // namespace netrel
