#include "evshare/ev_station.hpp"
#include "evshare/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace evshare {

FleetPattern parse_fleet_pattern(const std::string& name) {
  if (name == "residential") return FleetPattern::residential;
  if (name == "workplace") return FleetPattern::workplace;
  if (name == "leisure") return FleetPattern::leisure;
  throw std::invalid_argument("unknown fleet pattern '" + name + "'");
}

std::string to_string(FleetPattern p) {
  switch (p) {
    case FleetPattern::residential: return "residential";
    case FleetPattern::workplace: return "workplace";
    case FleetPattern::leisure: return "leisure";
  }
  return "unknown";
}

namespace {

// std:: distributions are implementation defined; these draws only depend
// on the raw engine output, so fleets are identical across toolchains.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean, double sd) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 eng_;
};

struct Window {
  double arrival_hour;
  double dwell_hours;
};

Window draw_window(Draw& d, FleetPattern p) {
  switch (p) {
    case FleetPattern::residential:
      // Evening arrival, stays overnight.
      return {std::clamp(d.normal(18.5, 1.5), 15.0, 22.0), d.uniform(6.0, 12.0)};
    case FleetPattern::workplace:
      return {std::clamp(d.normal(8.5, 1.0), 6.0, 11.0), d.uniform(6.0, 9.0)};
    case FleetPattern::leisure:
      return {d.uniform(10.0, 19.0), d.uniform(2.0, 4.0)};
  }
  return {0.0, 1.0};
}

}  // namespace

std::vector<EvTask> synthesize_fleet(int count, FleetPattern pattern, std::uint64_t seed, const TimeGrid& grid) {
  std::vector<EvTask> out;
  if (count <= 0) return out;
  Draw d(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(pattern));
  const int T = grid.horizon_slots;
  const double day_hours = 24.0;
  const double hours = T * grid.slot_hours;
  for (int v = 0; v < count; ++v) {
    const Window w = draw_window(d, pattern);
    // Map the 24 h pattern onto the horizon.
    const double scale = hours / day_hours;
    int arrival = static_cast<int>(std::floor(w.arrival_hour * scale / grid.slot_hours));
    arrival = std::clamp(arrival, 0, T - 1);
    int departure = arrival + std::max(1, static_cast<int>(std::lround(w.dwell_hours * scale / grid.slot_hours)));
    departure = std::min(departure, T);
    if (departure - arrival < 2 && arrival > 0 && T >= 2) arrival = std::max(0, departure - 2);

    EvTask t;
    t.id = "ev" + std::to_string(v + 1);
    t.arrival_slot = arrival;
    t.departure_slot = departure;
    t.energy_min = 0.0;
    t.energy_max = 60.0;
    t.initial_energy = std::round(d.uniform(0.15, 0.45) * t.energy_max * 100.0) / 100.0;
    // Keep the partial slot of the full-power profile inside the window.
    const int slots = departure - arrival;
    const double reachable = std::max(0.0, static_cast<double>(slots - 1)) * t.power_max * t.eff_charge * grid.slot_hours;
    const double wanted = d.uniform(8.0, 30.0);
    const double headroom = 0.95 * t.energy_max - t.initial_energy;
    double need = std::min({wanted, reachable, headroom});
    if (slots == 1) need = std::min(wanted, 0.5 * t.power_max * t.eff_charge * grid.slot_hours);
    t.required_energy = t.initial_energy + std::floor(std::max(need, 0.0) * 100.0) / 100.0;
    if (!casap_fits(t, grid)) t.required_energy = t.initial_energy;
    out.push_back(t);
  }
  return out;
}

}  // namespace evshare
