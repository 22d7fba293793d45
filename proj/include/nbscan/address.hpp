#pragma once

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "nbscan/bytes.hpp"

namespace nbscan {

enum class AddressClass { unicast, multicast, broadcast };

inline std::string_view to_string(AddressClass c) {
  switch (c) {
    case AddressClass::unicast: return "unicast";
    case AddressClass::multicast: return "multicast";
    case AddressClass::broadcast: return "broadcast";
  }
  return "unicast";
}

namespace detail {

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

template <std::size_t N>
std::optional<std::array<std::uint8_t, N>> parse_colon_hex(std::string_view s) {
  if (s.size() != N * 3 - 1) return std::nullopt;
  std::array<std::uint8_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t p = i * 3;
    if (i + 1 < N && s[p + 2] != ':') return std::nullopt;
    const int hi = hex_value(s[p]);
    const int lo = hex_value(s[p + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return out;
}

template <std::size_t N>
std::string render_colon_hex(const std::array<std::uint8_t, N>& octets) {
  std::string s;
  s.reserve(N * 3);
  for (std::size_t i = 0; i < N; ++i) {
    if (i) s.push_back(':');
    s += hex_string(octets[i], 2);
  }
  return s;
}

}  // namespace detail

/// 48-bit IEEE address, octets in transmission-display order
/// (first octet carries the I/G bit).
struct MacAddress {
  std::array<std::uint8_t, 6> octets{};

  static constexpr MacAddress broadcast() {
    return MacAddress{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
  }

  static std::optional<MacAddress> parse(std::string_view s) {
    auto o = detail::parse_colon_hex<6>(s);
    if (!o) return std::nullopt;
    return MacAddress{*o};
  }

  // Reads an address stored least-significant octet first, as BLE does.
  static MacAddress from_reversed(ByteView b, std::size_t off) {
    MacAddress a;
    for (std::size_t i = 0; i < 6; ++i) a.octets[i] = b[off + 5 - i];
    return a;
  }

  static MacAddress from_wire(ByteView b, std::size_t off) {
    MacAddress a;
    for (std::size_t i = 0; i < 6; ++i) a.octets[i] = b[off + i];
    return a;
  }

  std::string to_string() const { return detail::render_colon_hex(octets); }

  auto operator<=>(const MacAddress&) const = default;
};

inline AddressClass classify_address(const MacAddress& addr) {
  bool all_ones = true;
  for (auto o : addr.octets) all_ones = all_ones && o == 0xff;
  if (all_ones) return AddressClass::broadcast;
  if (addr.octets[0] & 0x01) return AddressClass::multicast;
  return AddressClass::unicast;
}

/// 802.15.4 16-bit short address.
struct ZigbeeShort {
  std::uint16_t value = 0;

  std::string to_string() const { return "0x" + hex_string(value, 4); }

  static std::optional<ZigbeeShort> parse(std::string_view s) {
    if (s.size() != 6 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X')) return std::nullopt;
    std::uint16_t v = 0;
    for (char c : s.substr(2)) {
      const int h = detail::hex_value(c);
      if (h < 0) return std::nullopt;
      v = static_cast<std::uint16_t>(v * 16 + h);
    }
    return ZigbeeShort{v};
  }

  auto operator<=>(const ZigbeeShort&) const = default;
};

/// 802.15.4 64-bit extended address, rendered most-significant octet first.
struct ZigbeeExtended {
  std::uint64_t value = 0;

  std::string to_string() const {
    std::array<std::uint8_t, 8> o{};
    for (std::size_t i = 0; i < 8; ++i) o[i] = static_cast<std::uint8_t>(value >> (56 - 8 * i));
    return detail::render_colon_hex(o);
  }

  static std::optional<ZigbeeExtended> parse(std::string_view s) {
    auto o = detail::parse_colon_hex<8>(s);
    if (!o) return std::nullopt;
    std::uint64_t v = 0;
    for (auto b : *o) v = (v << 8) | b;
    return ZigbeeExtended{v};
  }

  auto operator<=>(const ZigbeeExtended&) const = default;
};

inline AddressClass classify_address(const ZigbeeShort& addr) {
  return addr.value == 0xffff ? AddressClass::broadcast : AddressClass::unicast;
}

inline AddressClass classify_address(const ZigbeeExtended&) { return AddressClass::unicast; }

using Address = std::variant<MacAddress, ZigbeeShort, ZigbeeExtended>;

inline std::string to_string(const Address& a) {
  return std::visit([](const auto& x) { return x.to_string(); }, a);
}

inline std::optional<Address> parse_address(std::string_view s) {
  if (auto m = MacAddress::parse(s)) return Address{*m};
  if (auto z = ZigbeeShort::parse(s)) return Address{*z};
  if (auto e = ZigbeeExtended::parse(s)) return Address{*e};
  return std::nullopt;
}

}  // namespace nbscan
