#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include "nbscan/ble.hpp"
#include "nbscan/bytes.hpp"
#include "nbscan/frame.hpp"

namespace nbscan {

enum class CaptureErrc { unsupported_link_type, corrupt_file, io_failure, mixed_link_types };

inline std::string_view to_string(CaptureErrc e) {
  switch (e) {
    case CaptureErrc::unsupported_link_type: return "UnsupportedLinkType";
    case CaptureErrc::corrupt_file: return "CorruptFile";
    case CaptureErrc::io_failure: return "IoFailure";
    case CaptureErrc::mixed_link_types: return "MixedLinkTypes";
  }
  return "CaptureError";
}

class CaptureError : public std::runtime_error {
 public:
  CaptureError(CaptureErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  CaptureErrc code() const noexcept { return code_; }

 private:
  CaptureErrc code_;
};

namespace linktype {
inline constexpr std::uint32_t ieee802_11 = 105;
inline constexpr std::uint32_t ieee802_11_radiotap = 127;
inline constexpr std::uint32_t ieee802_15_4_withfcs = 195;
inline constexpr std::uint32_t ble_ll = 251;
inline constexpr std::uint32_t ble_ll_with_phdr = 256;
inline constexpr std::uint32_t ieee802_15_4_tap = 283;
}  // namespace linktype

inline std::optional<Protocol> protocol_for_link_type(std::uint32_t lt) {
  switch (lt) {
    case linktype::ieee802_11:
    case linktype::ieee802_11_radiotap: return Protocol::wifi;
    case linktype::ble_ll:
    case linktype::ble_ll_with_phdr: return Protocol::ble;
    case linktype::ieee802_15_4_withfcs:
    case linktype::ieee802_15_4_tap: return Protocol::zigbee;
    default: return std::nullopt;
  }
}

/// Link type used when writing captures: the variant carrying channel and
/// signal metadata for each protocol.
inline std::uint32_t spool_link_type(Protocol p) {
  switch (p) {
    case Protocol::wifi: return linktype::ieee802_11_radiotap;
    case Protocol::ble: return linktype::ble_ll_with_phdr;
    case Protocol::zigbee: return linktype::ieee802_15_4_tap;
  }
  return linktype::ieee802_11_radiotap;
}

inline int wifi_channel_from_mhz(int mhz) {
  if (mhz == 2484) return 14;
  if (mhz >= 2412 && mhz < 2484) return (mhz - 2407) / 5;
  if (mhz >= 5000 && mhz < 6000) return (mhz - 5000) / 5;
  return 0;
}

inline int wifi_mhz_from_channel(int ch) {
  if (ch == 14) return 2484;
  if (ch >= 1 && ch <= 13) return 2407 + 5 * ch;
  return 5000 + 5 * ch;
}

// BLE RF channel index (frequency order) to/from link-layer channel index.
inline int ble_channel_from_rf(int rf) {
  if (rf == 0) return 37;
  if (rf == 12) return 38;
  if (rf == 39) return 39;
  if (rf >= 1 && rf <= 11) return rf - 1;
  return rf - 2;
}

inline int ble_rf_from_channel(int ch) {
  if (ch == 37) return 0;
  if (ch == 38) return 12;
  if (ch == 39) return 39;
  if (ch <= 10) return ch + 1;
  return ch + 2;
}

struct PcapPacket {
  std::int64_t timestamp_us = 0;
  Bytes data;
};

class PcapReader {
 public:
  explicit PcapReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw CaptureError(CaptureErrc::io_failure, "cannot open " + path);
    std::uint8_t hdr[24];
    if (!in_.read(reinterpret_cast<char*>(hdr), sizeof hdr))
      throw CaptureError(CaptureErrc::corrupt_file, "short global header");
    std::uint32_t magic;
    std::memcpy(&magic, hdr, 4);
    if (magic == 0xa1b2c3d4) swapped_ = false;
    else if (magic == 0xd4c3b2a1) swapped_ = true;
    else throw CaptureError(CaptureErrc::corrupt_file, "bad magic");
    link_type_ = word(hdr + 20);
    if (!protocol_for_link_type(link_type_))
      throw CaptureError(CaptureErrc::unsupported_link_type,
                         "link type " + std::to_string(link_type_));
  }

  std::uint32_t link_type() const { return link_type_; }
  Protocol protocol() const { return *protocol_for_link_type(link_type_); }

  std::optional<PcapPacket> next() {
    std::uint8_t rh[16];
    in_.read(reinterpret_cast<char*>(rh), sizeof rh);
    if (in_.gcount() == 0) return std::nullopt;
    if (in_.gcount() != sizeof rh) throw CaptureError(CaptureErrc::corrupt_file, "short record header");
    const std::uint32_t sec = word(rh), usec = word(rh + 4), incl = word(rh + 8);
    if (incl > kMaxPacket || usec >= 1000000)
      throw CaptureError(CaptureErrc::corrupt_file, "implausible record header");
    PcapPacket p;
    p.timestamp_us = static_cast<std::int64_t>(sec) * 1000000 + usec;
    p.data.resize(incl);
    if (incl && !in_.read(reinterpret_cast<char*>(p.data.data()), incl))
      throw CaptureError(CaptureErrc::corrupt_file, "truncated packet data");
    return p;
  }

 private:
  static constexpr std::uint32_t kMaxPacket = 262144;

  std::uint32_t word(const std::uint8_t* p) const {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return swapped_ ? byteswap32(v) : v;
  }

  std::ifstream in_;
  bool swapped_ = false;
  std::uint32_t link_type_ = 0;
};

namespace pcap_detail {

inline std::size_t align_up(std::size_t v, std::size_t a) { return (v + a - 1) / a * a; }

inline std::optional<RawFrame> from_radiotap(const PcapPacket& p) {
  const ByteView d(p.data);
  if (d.size() < 8 || d[0] != 0) return std::nullopt;
  const std::size_t len = load_le16(d, 2);
  if (len < 8 || len > d.size()) return std::nullopt;
  std::size_t off = 4;
  const std::uint32_t present = load_le32(d, 4);
  for (std::uint32_t word = present; word & 0x80000000u;) {
    off += 4;
    if (off + 4 > len) return std::nullopt;
    word = load_le32(d, off);
  }
  off += 4;
  RawFrame f;
  f.protocol = Protocol::wifi;
  f.meta.timestamp_us = p.timestamp_us;
  struct Field {
    std::size_t align, size;
  };
  static constexpr Field kFields[] = {{8, 8}, {1, 1}, {1, 1}, {2, 4}, {1, 2}, {1, 1}};
  for (std::uint32_t bit = 0; bit < 6; ++bit) {
    if (!(present & (1u << bit))) continue;
    off = align_up(off, kFields[bit].align);
    if (off + kFields[bit].size > len) return std::nullopt;
    if (bit == 1) f.meta.has_fcs = (d[off] & 0x10) != 0;
    if (bit == 3) f.meta.channel = wifi_channel_from_mhz(load_le16(d, off));
    if (bit == 5) f.meta.rssi_dbm = static_cast<std::int8_t>(d[off]);
    off += kFields[bit].size;
  }
  f.bytes.assign(d.begin() + static_cast<std::ptrdiff_t>(len), d.end());
  return f;
}

inline std::optional<RawFrame> from_ble_phdr(const PcapPacket& p) {
  const ByteView d(p.data);
  if (d.size() < 10) return std::nullopt;
  RawFrame f;
  f.protocol = Protocol::ble;
  f.meta.timestamp_us = p.timestamp_us;
  if (d[0] < 40) f.meta.channel = ble_channel_from_rf(d[0]);
  const std::uint16_t flags = load_le16(d, 8);
  if (flags & 0x0002) f.meta.rssi_dbm = static_cast<std::int8_t>(d[1]);
  f.bytes.assign(d.begin() + 10, d.end());
  return f;
}

inline std::optional<RawFrame> from_154_tap(const PcapPacket& p) {
  const ByteView d(p.data);
  if (d.size() < 4 || d[0] != 0) return std::nullopt;
  const std::size_t len = load_le16(d, 2);
  if (len < 4 || len > d.size()) return std::nullopt;
  RawFrame f;
  f.protocol = Protocol::zigbee;
  f.meta.timestamp_us = p.timestamp_us;
  int fcs_type = 1;
  for (std::size_t off = 4; off + 4 <= len;) {
    const std::uint16_t type = load_le16(d, off), tlen = load_le16(d, off + 2);
    const std::size_t value = off + 4;
    if (value + tlen > len) return std::nullopt;
    if (type == 0 && tlen >= 1) fcs_type = d[value];
    if (type == 1 && tlen == 4) {
      float rss;
      std::memcpy(&rss, d.data() + value, 4);
      if (rss >= -255.0f && rss <= 255.0f) f.meta.rssi_dbm = static_cast<int>(rss);
    }
    if (type == 3 && tlen >= 2 && load_le16(d, value) <= 1000) f.meta.channel = load_le16(d, value);
    off = value + align_up(tlen, 4);
  }
  if (fcs_type != 1) return std::nullopt;
  f.bytes.assign(d.begin() + static_cast<std::ptrdiff_t>(len), d.end());
  return f;
}

}  // namespace pcap_detail

/// Strips the capture pseudo-header of `link_type` and harvests channel
/// and signal metadata. Returns nullopt when the pseudo-header is
/// malformed.
inline std::optional<RawFrame> decapsulate(std::uint32_t link_type, const PcapPacket& p) {
  switch (link_type) {
    case linktype::ieee802_11_radiotap: return pcap_detail::from_radiotap(p);
    case linktype::ble_ll_with_phdr: return pcap_detail::from_ble_phdr(p);
    case linktype::ieee802_15_4_tap: return pcap_detail::from_154_tap(p);
    default: break;
  }
  const auto proto = protocol_for_link_type(link_type);
  if (!proto) return std::nullopt;
  RawFrame f;
  f.protocol = *proto;
  f.meta.timestamp_us = p.timestamp_us;
  f.bytes = p.data;
  return f;
}

/// Wraps a frame in the pseudo-header of `link_type`.
inline Bytes encapsulate(std::uint32_t link_type, const RawFrame& f) {
  Bytes out;
  switch (link_type) {
    case linktype::ieee802_11_radiotap: {
      std::uint32_t present = 0x02;  // flags
      if (f.meta.channel) present |= 0x08;
      if (f.meta.rssi_dbm) present |= 0x20;
      Bytes fields;
      fields.push_back(f.meta.has_fcs ? 0x10 : 0x00);
      if (f.meta.channel) {
        fields.push_back(0);  // pad to 2-byte alignment (offset 9 -> 10)
        const int mhz = wifi_mhz_from_channel(*f.meta.channel);
        put_le16(fields, static_cast<std::uint16_t>(mhz));
        put_le16(fields, mhz < 3000 ? 0x00a0 : 0x0140);
      }
      if (f.meta.rssi_dbm) fields.push_back(static_cast<std::uint8_t>(*f.meta.rssi_dbm));
      out.push_back(0);
      out.push_back(0);
      put_le16(out, static_cast<std::uint16_t>(8 + fields.size()));
      put_le32(out, present);
      out.insert(out.end(), fields.begin(), fields.end());
      break;
    }
    case linktype::ble_ll_with_phdr: {
      out.push_back(f.meta.channel ? static_cast<std::uint8_t>(ble_rf_from_channel(*f.meta.channel)) : 0xff);
      out.push_back(static_cast<std::uint8_t>(f.meta.rssi_dbm.value_or(0)));
      out.push_back(0);
      out.push_back(0);
      put_le32(out, f.bytes.size() >= 4 ? load_le32(f.bytes, 0) : 0);
      put_le16(out, static_cast<std::uint16_t>(0x0001 | (f.meta.rssi_dbm ? 0x0002 : 0) | 0x0010));
      break;
    }
    case linktype::ieee802_15_4_tap: {
      Bytes tlvs;
      put_le16(tlvs, 0);
      put_le16(tlvs, 1);
      tlvs.insert(tlvs.end(), {1, 0, 0, 0});
      if (f.meta.rssi_dbm) {
        put_le16(tlvs, 1);
        put_le16(tlvs, 4);
        const float rss = static_cast<float>(*f.meta.rssi_dbm);
        std::uint8_t b[4];
        std::memcpy(b, &rss, 4);
        tlvs.insert(tlvs.end(), b, b + 4);
      }
      if (f.meta.channel) {
        put_le16(tlvs, 3);
        put_le16(tlvs, 3);
        put_le16(tlvs, static_cast<std::uint16_t>(*f.meta.channel));
        tlvs.insert(tlvs.end(), {0, 0});
      }
      out.push_back(0);
      out.push_back(0);
      put_le16(out, static_cast<std::uint16_t>(4 + tlvs.size()));
      out.insert(out.end(), tlvs.begin(), tlvs.end());
      break;
    }
    default: break;
  }
  out.insert(out.end(), f.bytes.begin(), f.bytes.end());
  return out;
}

class PcapWriter {
 public:
  PcapWriter(const std::string& path, std::uint32_t link_type)
      : out_(path, std::ios::binary | std::ios::trunc), link_type_(link_type) {
    if (!out_) throw CaptureError(CaptureErrc::io_failure, "cannot create " + path);
    Bytes hdr;
    put_le32(hdr, 0xa1b2c3d4);
    put_le16(hdr, 2);
    put_le16(hdr, 4);
    put_le32(hdr, 0);
    put_le32(hdr, 0);
    put_le32(hdr, 262144);
    put_le32(hdr, link_type);
    emit(hdr);
  }

  std::uint32_t link_type() const { return link_type_; }

  void write_packet(std::int64_t timestamp_us, ByteView data) {
    if (timestamp_us < 0) throw CaptureError(CaptureErrc::io_failure, "negative timestamp");
    Bytes rh;
    put_le32(rh, static_cast<std::uint32_t>(timestamp_us / 1000000));
    put_le32(rh, static_cast<std::uint32_t>(timestamp_us % 1000000));
    put_le32(rh, static_cast<std::uint32_t>(data.size()));
    put_le32(rh, static_cast<std::uint32_t>(data.size()));
    emit(rh);
    emit(data);
  }

  void write(const RawFrame& f) { write_packet(f.meta.timestamp_us, encapsulate(link_type_, f)); }

  void flush() {
    out_.flush();
    if (!out_) throw CaptureError(CaptureErrc::io_failure, "flush failed");
  }

 private:
  void emit(ByteView b) {
    out_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out_) throw CaptureError(CaptureErrc::io_failure, "write failed");
  }

  std::ofstream out_;
  std::uint32_t link_type_;
};

}  // namespace nbscan
