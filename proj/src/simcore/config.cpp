#include "marlsched/simcore/config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "marlsched/errors.hpp"

namespace marlsched::simcore {

std::vector<double> default_se_table() {
  // Levels 1..15: standard LTE CQI efficiencies (QPSK through 64QAM 948/1024).
  std::vector<double> se = {0.1523, 0.2344, 0.3770, 0.6016, 0.8770,
                            1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
                            3.3223, 3.9023, 4.5234, 5.1152, 5.5547};
  // Levels 16..29: strictly increasing saturating tail.
  for (int i = 0; i < 14; ++i) se.push_back(se.back() + 0.01);
  return se;
}

CellConfig default_cell_config() {
  CellConfig cfg;
  cfg.se_table = default_se_table();
  return cfg;
}

double CellConfig::spectral_efficiency(int level) const {
  return se_table[static_cast<std::size_t>(level - mcs_min)];
}

double CellConfig::snr_db(double rsrp_dbm) const {
  return rsrp_dbm - (noise_density_dbm_hz + 10.0 * std::log10(rb_bandwidth_hz()));
}

int CellConfig::clamp_level(double level) const {
  const auto r = static_cast<int>(std::lround(level));
  return std::clamp(r, mcs_min, mcs_max);
}

int CellConfig::base_cqi(double rsrp_dbm) const {
  return clamp_level(cqi_slope * snr_db(rsrp_dbm) + cqi_intercept);
}

void CellConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("cell config: " + msg); };
  if (rbs_per_rbg < 1) fail("rbs_per_rbg must be >= 1");
  if (n_rbgs < 1) fail("n_rbgs must be >= 1");
  if (rbg_bandwidth_hz <= 0) fail("rbg_bandwidth_hz must be positive");
  if (mcs_min < 1 || mcs_max < mcs_min) fail("mcs range must satisfy 1 <= mcs_min <= mcs_max");
  if (se_table.size() != static_cast<std::size_t>(n_mcs()))
    fail("se_table must have one entry per MCS level (" + std::to_string(n_mcs()) + ")");
  for (std::size_t i = 0; i < se_table.size(); ++i) {
    if (se_table[i] <= 0) fail("se_table entries must be positive");
    if (i > 0 && se_table[i] <= se_table[i - 1]) fail("se_table must be strictly increasing");
  }
  if (res_per_rb < 1) fail("res_per_rb must be >= 1");
  if (fading_std < 0) fail("fading_std must be >= 0");
  if (cqi_offset_max < cqi_offset_min) fail("cqi_offset range is inverted");
  if (olla_clamp < 0) fail("olla_clamp must be >= 0");
  if (n_harq < 1) fail("n_harq must be >= 1");
  if (harq_feedback_period < 1) fail("harq_feedback_period must be >= 1");
  if (harq_max_attempts < 1) fail("harq_max_attempts must be >= 1");
  if (arrival_rate < 0) fail("arrival_rate must be >= 0");
  if (initial_users < 0) fail("initial_users must be >= 0");
  if (max_users < 1) fail("max_users must be >= 1");
  if (initial_users > max_users) fail("initial_users must not exceed max_users");
  if (buffer_min_bits <= 0 || buffer_max_bits < buffer_min_bits)
    fail("buffer bit range must satisfy 0 < min <= max");
  if (rsrp_max_dbm < rsrp_min_dbm) fail("rsrp range is inverted");
  if (initial_cqi < mcs_min || initial_cqi > mcs_max) fail("initial_cqi outside MCS range");
  if (ma_coeff <= 0 || ma_coeff > 1) fail("ma_coeff must lie in (0, 1]");
}

}  // namespace marlsched::simcore
