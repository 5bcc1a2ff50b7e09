#ifndef NETREL_FRAGILITY_HPP
#define NETREL_FRAGILITY_HPP

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "netrel/hazard.hpp"
#include "netrel/network.hpp"

namespace netrel {

enum class DamageState { slight = 0, moderate = 1, extensive = 2, complete = 3 };

enum class ImKind { pga, sa_0_3, sa_1_0 };

DamageState damage_state_from_string(const std::string& s);
ImKind im_kind_from_string(const std::string& s);

struct IntensityMeasures {
    std::optional<double> pga;     // g
    std::optional<double> sa_0_3;  // g
    std::optional<double> sa_1_0;  // g

    std::optional<double> get(ImKind kind) const;
};

// Lognormal exceedance curve for one damage state.
struct FragilityCurve {
    DamageState damage_state;
    ImKind im_kind;
    double median_im;  // g
    double beta_ln;
};

struct Bridge {
    int id = -1;
    Site site;
    std::string bridge_class;
    // Indexed by DamageState; all four states present after load.
    std::vector<FragilityCurve> curves;

    const FragilityCurve& curve(DamageState ds) const;
};

// class -> per-damage-state curves, from the fragility CSV.
using FragilityTable = std::map<std::string, std::vector<FragilityCurve>>;

// CSV header: class,damage_state,im_kind,median_g,beta_ln
FragilityTable load_fragility_table(const std::string& text);

// JSON {"bridges":[{"id":..,"lat":..,"lon":..,"class":..,"vs30":..,"basin_depth":..}...]}
std::vector<Bridge> load_bridges(const std::string& text, const FragilityTable& table);

double standard_normal_cdf(double z);

// Phi(ln(im / median) / beta), the probability of reaching or exceeding the
// curve's damage state at intensity im.
double damage_exceedance_prob(const FragilityCurve& curve, double im);

// 1 - P(extensive or worse); a bridge stops functioning at the onset of
// extensive damage.
double bridge_survival_prob(const Bridge& bridge, const IntensityMeasures& ims);

// Roadway survival probabilities per link: exp of summed bridge log-survivals
// (empty product = 1 for bridgeless links).
std::vector<double> roadway_survival_probs(
    const TransportNetwork& net, const std::unordered_map<int, double>& bridge_survivals);

}  // namespace netrel

#endif
