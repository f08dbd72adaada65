#include "v2xmec/model.hpp"

#include <cmath>
#include <string>

#include "v2xmec/errors.hpp"

namespace v2xmec {

double SequentialTask::total_workload() const {
  double sum = 0.0;
  for (const auto& s : subtasks) sum += s.workload;
  return sum;
}

double SequentialTask::workload_between(int first, int last) const {
  double sum = 0.0;
  for (int m = first; m <= last; ++m) sum += subtasks[static_cast<size_t>(m - 1)].workload;
  return sum;
}

double SequentialTask::bits_into(int m) const {
  if (m < 1 || m > size()) throw DomainError("bits_into: subtask index out of range");
  if (m == 1) return input_size;
  return subtasks[static_cast<size_t>(m - 2)].output_size;
}

void SequentialTask::validate() const {
  if (subtasks.empty()) throw ConfigError("task must have at least one subtask");
  if (!(deadline > 0.0)) throw ConfigError("task deadline must be positive");
  if (input_size < 0.0) throw ConfigError("task input size must be nonnegative");
  for (const auto& s : subtasks) {
    if (!(s.workload > 0.0)) throw ConfigError("subtask workloads must be positive");
    if (s.output_size < 0.0) throw ConfigError("subtask output sizes must be nonnegative");
  }
}

double ChannelParams::v2v_fading_for(int nv_id) const {
  auto it = v2v_fading.find(nv_id);
  return it == v2v_fading.end() ? fading_default : it->second;
}

double ChannelParams::v2i_fading_for(int nv_id) const {
  auto it = v2i_fading.find(nv_id);
  return it == v2i_fading.end() ? fading_default : it->second;
}

void ChannelParams::validate() const {
  if (!(b_v2v > 0.0) || !(b_total > 0.0) || !(b0 > 0.0)) {
    throw ConfigError("bandwidths must be positive");
  }
  if (num_subchannels < 1) throw ConfigError("subchannel count must be positive");
  if (std::abs(b0 * num_subchannels - b_total) > 1e-9 * b_total) {
    throw ConfigError("subchannel width times count must equal the total bandwidth");
  }
  if (!(noise_density > 0.0)) throw ConfigError("noise density must be positive");
  if (!(d_v2v_max > 0.0)) throw ConfigError("V2V range must be positive");
  if (!(fading_default > 0.0)) throw ConfigError("fading gains must be positive");
  if (setup_delay < 0.0 || wired_energy_per_bit < 0.0 || wired_delay_per_bit < 0.0) {
    throw ConfigError("per-bit costs and setup delay must be nonnegative");
  }
  if (tau_max && !(*tau_max > 0.0)) throw ConfigError("tau_max must be positive");
  for (const auto& [id, h] : v2v_fading)
    if (!(h > 0.0)) throw ConfigError("fading gains must be positive");
  for (const auto& [id, h] : v2i_fading)
    if (!(h > 0.0)) throw ConfigError("fading gains must be positive");
}

double euclidean(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double v2i_distance(const Position& vehicle, const Rsu& rsu, bool use_3d) {
  const double dx = vehicle.x - rsu.pos.x;
  const double dy = vehicle.y - rsu.pos.y;
  return use_3d ? std::sqrt(dx * dx + dy * dy + rsu.height * rsu.height) : std::hypot(dx, dy);
}

double v2v_gain(double dist, double fading) {
  if (!(dist > 0.0)) throw DomainError("v2v_gain: distance must be positive");
  const double pathloss_db = 63.3 + 17.7 * std::log10(dist);
  return std::pow(10.0, -pathloss_db / 10.0) * fading;
}

double v2i_gain(double dist, double delta, double fading) {
  if (!(dist > 0.0)) throw DomainError("v2i_gain: distance must be positive");
  return std::pow(dist, -delta) * fading;
}

double transmit_energy(double bits, double tau, double bandwidth, double gain, double noise) {
  if (bits < 0.0) throw DomainError("transmit_energy: negative bit count");
  if (bits == 0.0) return 0.0;
  if (!(tau > 0.0) || !(bandwidth > 0.0) || !(gain > 0.0) || !(noise > 0.0)) {
    throw DomainError("transmit_energy: tau, bandwidth, gain and noise must be positive");
  }
  const double exponent = bits / (tau * bandwidth);
  if (exponent > 700.0) {
    throw NumericOverflowError("transmit_energy: rate exponent " + std::to_string(exponent) +
                               " overflows");
  }
  return bandwidth * noise * tau / gain * std::expm1(exponent);
}

WiredTransfer wired_transfer(double bits, const ChannelParams& params) {
  if (bits < 0.0) throw DomainError("wired_transfer: negative bit count");
  return {params.wired_energy_per_bit * bits, params.wired_delay_per_bit * bits};
}

double compute_delay(double workload, double freq) {
  if (!(freq > 0.0)) throw DomainError("compute_delay: frequency must be positive");
  if (workload < 0.0) throw DomainError("compute_delay: negative workload");
  return workload / freq;
}

double compute_energy(double kappa, double workload, double freq) {
  if (!(freq > 0.0)) throw DomainError("compute_energy: frequency must be positive");
  if (workload < 0.0) throw DomainError("compute_energy: negative workload");
  return kappa * workload * freq * freq;
}

}  // namespace v2xmec
