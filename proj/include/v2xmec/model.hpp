// Domain types and the communication / computation cost formulas.
//
// Units are strict SI throughout: bits, Hz, seconds, Joules, meters, W/Hz.
// Config-level conveniences (dBW/Hz noise, "Mb") are converted at load time.
#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

namespace v2xmec {

enum class Role { NV, IV, HV };

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct Vehicle {
  int id = -1;
  Position pos;
  double velocity = 0.0;  // m/s, driving direction is +x
  double max_cpu = 0.0;   // Hz
  double kappa = 0.0;     // J*s^2/cycle (energy = kappa * C * f^2)
  double weight = 1.0;
  Role role = Role::IV;
};

struct Subtask {
  double workload = 0.0;     // CPU cycles
  double output_size = 0.0;  // bits handed to the next subtask
};

/// An application task whose subtasks must run strictly in order.
struct SequentialTask {
  int owner = -1;
  double input_size = 0.0;  // bits entering subtask 1
  std::vector<Subtask> subtasks;
  double deadline = 0.0;  // seconds

  int size() const { return static_cast<int>(subtasks.size()); }
  double total_workload() const;
  /// Sum of workloads for subtasks in [first, last], 1-based inclusive.
  double workload_between(int first, int last) const;
  /// Input data size of subtask m (1-based): the task input for m = 1,
  /// otherwise the output of subtask m-1.
  double bits_into(int m) const;
  void validate() const;  // throws ConfigError on a malformed task
};

struct Rsu {
  int id = -1;
  Position pos;
  double height = 0.0;         // meters
  double service_range = 0.0;  // meters
  double max_cpu = 0.0;        // Hz
  double kappa = 0.0;
  double weight = 1.0;
};

struct ChannelParams {
  double b_v2v = 1e7;    // V2V link bandwidth, Hz
  double b_total = 1e8;  // uplink bandwidth at the serving RSU, Hz
  double b0 = 1e6;       // subchannel width, Hz
  int num_subchannels = 100;
  double noise_density = 1e-14;  // W/Hz, linear
  double v2i_pathloss_exponent = 3.0;
  double wired_energy_per_bit = 1e-5;  // J/bit between adjacent RSUs
  double wired_delay_per_bit = 1e-8;   // s/bit
  double d_v2v_max = 70.0;             // meters
  double setup_delay = 1e-4;           // link setup, seconds
  std::optional<double> tau_max;       // uplink delay cap; task deadline if unset
  bool v2i_3d_distance = true;         // include RSU height in the V2I distance
  double fading_default = 1.0;
  // Per-link fading snapshots, keyed by the NV id (each NV has one V2V link
  // and one V2I uplink); missing keys fall back to fading_default.
  std::unordered_map<int, double> v2v_fading;
  std::unordered_map<int, double> v2i_fading;

  double v2v_fading_for(int nv_id) const;
  double v2i_fading_for(int nv_id) const;
  double tau_max_or(double deadline) const { return tau_max.value_or(deadline); }
  void validate() const;
};

double euclidean(const Position& a, const Position& b);
/// NV-to-RSU distance; includes the RSU height as a third coordinate when
/// use_3d is set.
double v2i_distance(const Position& vehicle, const Rsu& rsu, bool use_3d);

/// Linear V2V channel gain at the given distance: path loss
/// 63.3 + 17.7*log10(d) dB, times the fading factor.
double v2v_gain(double dist, double fading = 1.0);

/// Linear V2I channel gain: d^(-delta) times the fading factor.
double v2i_gain(double dist, double delta, double fading = 1.0);

/// Energy to push `bits` through an AWGN link of the given bandwidth within
/// delay tau at channel gain `gain`:
///   E = bandwidth * noise * tau / gain * (e^(bits/(tau*bandwidth)) - 1).
/// Zero bits cost zero.  Raises NumericOverflowError when the exponent
/// exceeds 700 (energy would not be representable).
double transmit_energy(double bits, double tau, double bandwidth, double gain, double noise);

struct WiredTransfer {
  double energy = 0.0;  // Joules
  double delay = 0.0;   // seconds
};

/// Linear per-bit cost of the wired RSU-to-RSU link.
WiredTransfer wired_transfer(double bits, const ChannelParams& params);

double compute_delay(double workload, double freq);
double compute_energy(double kappa, double workload, double freq);

}  // namespace v2xmec
