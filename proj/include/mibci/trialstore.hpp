#pragma once

// Trial data model and the MIEC epoch container.
//
// MIEC layout (all integers little-endian):
//
//   offset  size  field
//   0       5     magic "MIEC1"
//   5       1     version (1)
//   6       4     trial_count   u32
//   10      2     channels      u16
//   12      4     samples       u32
//   16      4     sample rate   u32, millihertz
//   20      ...   trial_count records:
//                   subject u16, session u8, label u8,
//                   channels*samples f32 (IEEE-754, little-endian), channel-major
//
// A sidecar JSON document next to the container carries channel names and the
// cue window; see sidecar_json().

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mibci/error.hpp"
#include "mibci/signal.hpp"

namespace mibci {

inline constexpr int kNumClasses = 4;
inline constexpr std::array<char, 5> kMiecMagic{'M', 'I', 'E', 'C', '1'};
inline constexpr std::uint8_t kMiecVersion = 1;
inline constexpr std::size_t kMiecHeaderBytes = 20;
inline constexpr std::size_t kMiecTrialPrefixBytes = 4;

struct Trial {
  Signal data;  // channels x samples, microvolts
  int label = 1;  // 1..4
  int subject = 1;
  int session = 1;
};

struct CueWindow {
  double start_s = 0.0;
  double end_s = 4.0;
};

struct ClassCounts {
  std::array<std::size_t, kNumClasses> counts{};
  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

/// Labeled EEG epochs sharing one geometry. Treated as immutable once built.
struct TrialSet {
  std::vector<Trial> trials;
  double sample_rate = 250.0;
  std::vector<std::string> channel_names;
  CueWindow cue_window;
  std::size_t channels = 0;
  std::size_t samples = 0;

  std::size_t size() const { return trials.size(); }

  /// Throws InvalidArgument on the first broken invariant.
  void validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
      throw InvalidArgument("sample rate must be positive");
    if (!channel_names.empty() && channel_names.size() != channels)
      throw InvalidArgument("channel name count " + std::to_string(channel_names.size()) +
                            " does not match channel count " + std::to_string(channels));
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const Trial& t = trials[i];
      if (static_cast<std::size_t>(t.data.rows()) != channels ||
          static_cast<std::size_t>(t.data.cols()) != samples)
        throw InvalidArgument("trial " + std::to_string(i) + " has shape " + std::to_string(t.data.rows()) +
                              "x" + std::to_string(t.data.cols()) + ", expected " + std::to_string(channels) +
                              "x" + std::to_string(samples));
      if (t.label < 1 || t.label > kNumClasses)
        throw InvalidArgument("trial " + std::to_string(i) + " has label " + std::to_string(t.label));
      if (t.subject < 1 || t.subject > 0xFFFF)
        throw InvalidArgument("trial " + std::to_string(i) + " has subject " + std::to_string(t.subject));
      if (t.session < 1 || t.session > 0xFF)
        throw InvalidArgument("trial " + std::to_string(i) + " has session " + std::to_string(t.session));
      if (!t.data.allFinite()) throw InvalidArgument("trial " + std::to_string(i) + " has non-finite samples");
    }
  }

  std::vector<int> subjects() const {
    std::vector<int> out;
    for (const auto& t : trials)
      if (std::find(out.begin(), out.end(), t.subject) == out.end()) out.push_back(t.subject);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Per (subject, session) class counts.
  std::map<std::pair<int, int>, ClassCounts> class_counts() const {
    std::map<std::pair<int, int>, ClassCounts> out;
    for (const auto& t : trials) ++out[{t.subject, t.session}].counts[t.label - 1];
    return out;
  }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(trials.size());
    for (const auto& t : trials) out.push_back(t.label);
    return out;
  }
};

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// Reads exactly n bytes; returns the count actually read.
inline std::size_t read_exact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

}  // namespace detail

struct ContainerHeader {
  std::array<char, 5> magic = kMiecMagic;
  std::uint8_t version = kMiecVersion;
  std::uint32_t trial_count = 0;
  std::uint16_t channels = 0;
  std::uint32_t samples = 0;
  std::uint32_t sample_rate_mhz = 0;
};

/// Writes `set` as MIEC to `out`; returns the number of bytes written.
inline std::size_t write_container(const TrialSet& set, std::ostream& out) {
  set.validate();
  if (set.channels > 0xFFFF) throw InvalidArgument("too many channels for MIEC");
  if (set.trials.size() > 0xFFFFFFFFull || set.samples > 0xFFFFFFFFull)
    throw InvalidArgument("trial set too large for MIEC");
  const double mhz = std::round(set.sample_rate * 1000.0);
  if (mhz < 1.0 || mhz > 4294967295.0) throw InvalidArgument("sample rate not representable in MIEC");

  std::string header;
  header.append(kMiecMagic.data(), kMiecMagic.size());
  header.push_back(static_cast<char>(kMiecVersion));
  detail::put_u32(header, static_cast<std::uint32_t>(set.trials.size()));
  detail::put_u16(header, static_cast<std::uint16_t>(set.channels));
  detail::put_u32(header, static_cast<std::uint32_t>(set.samples));
  detail::put_u32(header, static_cast<std::uint32_t>(mhz));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::size_t written = header.size();

  std::string record;
  record.reserve(kMiecTrialPrefixBytes + set.channels * set.samples * 4);
  for (const Trial& t : set.trials) {
    record.clear();
    detail::put_u16(record, static_cast<std::uint16_t>(t.subject));
    record.push_back(static_cast<char>(static_cast<std::uint8_t>(t.session)));
    record.push_back(static_cast<char>(static_cast<std::uint8_t>(t.label)));
    for (Eigen::Index c = 0; c < t.data.rows(); ++c)
      for (Eigen::Index s = 0; s < t.data.cols(); ++s)
        detail::put_u32(record, std::bit_cast<std::uint32_t>(static_cast<float>(t.data(c, s))));
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
    written += record.size();
  }
  if (!out) throw Error("failed writing MIEC stream");
  return written;
}

inline std::string write_container_bytes(const TrialSet& set) {
  std::ostringstream os(std::ios::binary);
  write_container(set, os);
  return std::move(os).str();
}

inline ContainerHeader read_container_header(std::istream& in) {
  unsigned char buf[kMiecHeaderBytes];
  const std::size_t got = detail::read_exact(in, reinterpret_cast<char*>(buf), kMiecHeaderBytes);
  if (got < kMiecMagic.size() ||
      std::memcmp(buf, kMiecMagic.data(), kMiecMagic.size()) != 0)
    throw FormatError("bad magic: stream is not an MIEC container");
  if (got < kMiecHeaderBytes) throw FormatError("truncated MIEC header");
  ContainerHeader h;
  h.version = buf[5];
  if (h.version != kMiecVersion) throw FormatError("unsupported MIEC version " + std::to_string(h.version));
  h.trial_count = detail::get_u32(buf + 6);
  h.channels = detail::get_u16(buf + 10);
  h.samples = detail::get_u32(buf + 12);
  h.sample_rate_mhz = detail::get_u32(buf + 16);
  if (h.sample_rate_mhz == 0) throw FormatError("MIEC header has zero sample rate");
  return h;
}

/// Parses an MIEC stream. Either the whole stream is valid or FormatError is thrown.
inline TrialSet read_container(std::istream& in) {
  const ContainerHeader h = read_container_header(in);
  TrialSet set;
  set.channels = h.channels;
  set.samples = h.samples;
  set.sample_rate = h.sample_rate_mhz / 1000.0;
  set.cue_window = {0.0, static_cast<double>(h.samples) / set.sample_rate};

  const std::size_t values = static_cast<std::size_t>(h.channels) * h.samples;
  const std::size_t record_bytes = kMiecTrialPrefixBytes + values * 4;
  // A corrupted header must not drive a huge allocation: when the stream
  // length is known, reject a short payload before reading it.
  const auto here = in.tellg();
  if (here != std::streampos(-1) && h.trial_count > 0) {
    in.seekg(0, std::ios::end);
    const auto end = in.tellg();
    in.seekg(here);
    const auto remaining = static_cast<std::uint64_t>(end - here);
    if (remaining / record_bytes < h.trial_count) {
      const auto whole = remaining / record_bytes;
      throw FormatError("truncated payload in trial " + std::to_string(whole) + " (" +
                        std::to_string(remaining - whole * record_bytes) + " of " + std::to_string(record_bytes) +
                        " bytes)");
    }
  }
  set.trials.reserve(std::min<std::size_t>(h.trial_count, 4096));
  std::vector<unsigned char> record(record_bytes);
  for (std::uint32_t i = 0; i < h.trial_count; ++i) {
    const std::size_t got = detail::read_exact(in, reinterpret_cast<char*>(record.data()), record.size());
    if (got < record.size())
      throw FormatError("truncated payload in trial " + std::to_string(i) + " (" + std::to_string(got) + " of " +
                        std::to_string(record.size()) + " bytes)");
    Trial t;
    t.subject = detail::get_u16(record.data());
    t.session = record[2];
    t.label = record[3];
    if (t.label < 1 || t.label > kNumClasses)
      throw FormatError("trial " + std::to_string(i) + " has label " + std::to_string(t.label) + " outside 1..4");
    if (t.subject < 1) throw FormatError("trial " + std::to_string(i) + " has subject 0");
    if (t.session < 1) throw FormatError("trial " + std::to_string(i) + " has session 0");
    t.data.resize(h.channels, h.samples);
    const unsigned char* p = record.data() + kMiecTrialPrefixBytes;
    for (std::size_t c = 0; c < h.channels; ++c) {
      for (std::size_t s = 0; s < h.samples; ++s, p += 4) {
        const float v = std::bit_cast<float>(detail::get_u32(p));
        if (!std::isfinite(v))
          throw FormatError("trial " + std::to_string(i) + " has a non-finite sample at channel " +
                            std::to_string(c) + ", sample " + std::to_string(s));
        t.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s)) = v;
      }
    }
    set.trials.push_back(std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes after " + std::to_string(h.trial_count) + " trials");
  return set;
}

inline TrialSet read_container_bytes(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  return read_container(is);
}

// ---------------------------------------------------------------------------
// Sidecar and on-disk layout

inline nlohmann::json sidecar_json(const TrialSet& set) {
  return {{"format", "miec-sidecar"},
          {"version", 1},
          {"sample_rate_hz", set.sample_rate},
          {"channel_names", set.channel_names},
          {"cue_window", {set.cue_window.start_s, set.cue_window.end_s}}};
}

inline void apply_sidecar(TrialSet& set, const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != "miec-sidecar") throw FormatError("sidecar format tag missing");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported sidecar version");
    auto names = j.at("channel_names").get<std::vector<std::string>>();
    if (!names.empty() && names.size() != set.channels)
      throw FormatError("sidecar lists " + std::to_string(names.size()) + " channels, container has " +
                        std::to_string(set.channels));
    set.channel_names = std::move(names);
    const auto cw = j.at("cue_window").get<std::vector<double>>();
    if (cw.size() != 2 || !(cw[1] > cw[0])) throw FormatError("sidecar cue_window must be [start, end]");
    set.cue_window = {cw[0], cw[1]};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed sidecar: ") + e.what());
  }
}

/// Resolves a dataset path: a directory holds trials.miec + trials.json,
/// a file path names the container and its sidecar shares the stem.
inline std::pair<std::filesystem::path, std::filesystem::path> dataset_paths(const std::filesystem::path& p) {
  if (std::filesystem::is_directory(p) || !p.has_extension())
    return {p / "trials.miec", p / "trials.json"};
  auto side = p;
  side.replace_extension(".json");
  return {p, side};
}

inline std::size_t save_dataset(const TrialSet& set, const std::filesystem::path& where) {
  auto [container, sidecar] = dataset_paths(where);
  if (container.has_parent_path()) std::filesystem::create_directories(container.parent_path());
  std::ofstream out(container, std::ios::binary);
  if (!out) throw Error("cannot open " + container.string() + " for writing");
  const std::size_t n = write_container(set, out);
  out.close();
  if (!out) throw Error("failed writing " + container.string());
  std::ofstream js(sidecar);
  js << sidecar_json(set).dump(2) << "\n";
  if (!js) throw Error("failed writing " + sidecar.string());
  return n;
}

inline TrialSet load_dataset(const std::filesystem::path& where) {
  auto [container, sidecar] = dataset_paths(where);
  std::ifstream in(container, std::ios::binary);
  if (!in) throw Error("cannot open " + container.string());
  TrialSet set = read_container(in);
  if (std::filesystem::exists(sidecar)) {
    std::ifstream js(sidecar);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(sidecar.string() + ": " + e.what());
    }
    apply_sidecar(set, j);
  }
  return set;
}

// ---------------------------------------------------------------------------
// Epoching

/// Cuts fixed windows starting at each cue onset. Pure slicing.
inline std::vector<Signal> epoch_cue_window(const Signal& continuous, std::span<const std::size_t> cue_onsets,
                                            double window_s, double sample_rate) {
  if (!(window_s > 0.0)) throw InvalidArgument("empty epoch window");
  if (!(sample_rate > 0.0)) throw InvalidArgument("sample rate must be positive");
  const auto n = static_cast<std::size_t>(std::llround(window_s * sample_rate));
  if (n == 0) throw InvalidArgument("empty epoch window");
  std::vector<Signal> out;
  out.reserve(cue_onsets.size());
  for (std::size_t onset : cue_onsets) {
    if (onset + n > static_cast<std::size_t>(continuous.cols()))
      throw InvalidArgument("cue onset at sample " + std::to_string(onset) + " too close to end of recording (" +
                            std::to_string(continuous.cols()) + " samples, window " + std::to_string(n) + ")");
    out.emplace_back(continuous.middleCols(static_cast<Eigen::Index>(onset), static_cast<Eigen::Index>(n)));
  }
  return out;
}

/// The 22 electrode labels of the four-class motor imagery montage.
inline std::vector<std::string> standard_channel_names() {
  return {"Fz",  "FC3", "FC1", "FCz", "FC2", "FC4", "C5",  "C3", "C1", "Cz",  "C2",
          "C4",  "C6",  "CP3", "CP1", "CPz", "CP2", "CP4", "P1", "Pz", "P2", "POz"};
}

}  // namespace mibci
