#pragma once

#include <cstdint>
#include <string_view>

namespace paqman {

/// Admission decision taken on a packet at a decision epoch.
enum class Action : std::uint8_t { admit = 0, drop = 1 };

constexpr std::string_view to_string(Action a) { return a == Action::admit ? "admit" : "drop"; }

/// Packets/second <-> Mbit/s, using a fixed packet size in bits.
struct Units {
  double packet_size_bits = 12500.0;

  double to_packets(double mbit_per_s) const { return mbit_per_s * 1e6 / packet_size_bits; }
  double to_mbit(double packets_per_s) const { return packets_per_s * packet_size_bits / 1e6; }
};

}  // namespace paqman
