#pragma once

#include <vector>

namespace marlsched::simcore {

// Static parameters of one downlink cell. Power and noise are in dB-domain
// units; buffers and transport blocks are integer bits; time is the TTI index.
struct CellConfig {
  // radio
  double tx_power_per_rb_dbm = 18.0;
  int rbs_per_rbg = 3;
  int n_rbgs = 3;
  double rbg_bandwidth_hz = 10e6;
  double noise_density_dbm_hz = -174.0;

  // link adaptation domain: one unified CQI/MCS index range
  int mcs_min = 1;
  int mcs_max = 29;
  std::vector<double> se_table;  // bits/symbol, index 0 maps to mcs_min
  int res_per_rb = 168;          // resource elements usable per RB per TTI

  // channel reporting: reported level ~ slope * snr_db + intercept, plus
  // per-RB fading noise and a per-user constant bias the scheduler never sees
  double cqi_slope = 0.62;
  double cqi_intercept = 0.9;
  double fading_std = 1.0;
  double cqi_offset_min = -2.0;  // negative offset biases reports upward
  double cqi_offset_max = 2.0;

  // outer-loop link adaptation
  double olla_step_ack = 0.1;
  double olla_step_nack = -0.5;
  double olla_clamp = 10.0;  // alpha stays within [-clamp, clamp]

  // HARQ
  int n_harq = 8;
  int harq_feedback_period = 8;
  int harq_max_attempts = 5;  // expires, and the packet is lost, on the 5th NACK

  // traffic
  double arrival_rate = 0.01;
  int initial_users = 5;
  int max_users = 10;
  double buffer_min_bits = 4000.0;
  double buffer_max_bits = 100000.0;
  double rsrp_min_dbm = -100.0;
  double rsrp_max_dbm = -70.0;
  int initial_cqi = 4;
  bool full_buffer = false;  // arrivals off, buffers never drain, no departures

  // moving-average coefficient for the historical rate estimate
  double ma_coeff = 0.1;

  int n_rbs() const { return n_rbgs * rbs_per_rbg; }
  int n_mcs() const { return mcs_max - mcs_min + 1; }
  double rb_bandwidth_hz() const { return rbg_bandwidth_hz / rbs_per_rbg; }

  // F(level) in bits/symbol; level must lie in [mcs_min, mcs_max].
  double spectral_efficiency(int level) const;

  // Wideband SNR of a user: rsrp - (noise density + 10*log10(per-RB bandwidth)).
  double snr_db(double rsrp_dbm) const;

  // Deterministic CQI the channel would report with no fading and no bias.
  int base_cqi(double rsrp_dbm) const;

  int clamp_level(double level) const;

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

// 29-entry monotone table: the 15 standard LTE CQI efficiencies followed by a
// slowly saturating tail, so the low half matches deployed link adaptation
// exactly and the high half rewards good channels without exploding.
std::vector<double> default_se_table();

// CellConfig with se_table populated.
CellConfig default_cell_config();

}  // namespace marlsched::simcore
