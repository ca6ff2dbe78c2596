#ifndef PLANPROBE_ACTIVATION_STORE_HPP
#define PLANPROBE_ACTIVATION_STORE_HPP

// Indexed binary container for per-layer activation records.
//
// Layout (little-endian throughout, strings are u32 byte length + UTF-8):
//
//   header   magic "PLNPROBE" (8 bytes) | u16 version | str model_name |
//            u16 layer_count | u32 hidden_dim | u64 record_count | str task_id
//   index    record_count x u64 absolute byte offset of each record
//   records  u64 example_id | u64 group_id | i64 truncation_offset |
//            u32 response_token_count | u8 flags | str prompt_text |
//            str response_text | [str gold_label] |
//            layer_count x hidden_dim x f32 activations (row-major by layer)
//
// flags: bit 0 = generation ended with end-of-sequence, bit 1 = gold label
// present. The activation block is the record's tail, so row l of record i
// starts at offset[i + 1] - (L - l) * d * 4 (the file end for the last record).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "planprobe/binary_io.hpp"
#include "planprobe/error.hpp"
#include "planprobe/sha256.hpp"
#include "planprobe/version.hpp"

namespace planprobe {

inline constexpr char kDatasetMagic[8] = {'P', 'L', 'N', 'P', 'R', 'O', 'B', 'E'};
inline constexpr std::uint16_t kDatasetVersion = 1;

struct DatasetHeader {
  std::uint16_t version = kDatasetVersion;
  std::string model_name;
  std::uint16_t layer_count = 0;
  std::uint32_t hidden_dim = 0;
  std::uint64_t record_count = 0;
  std::string task_id;

  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct ActivationRecord {
  std::uint64_t example_id = 0;
  std::uint64_t group_id = 0;
  std::string prompt_text;
  std::string response_text;
  /// Token index into the response at the capture position; -1 is prompt end.
  std::int64_t truncation_offset = -1;
  std::optional<std::string> gold_label;
  /// Model tokenizer count of response_text, excluding special tokens.
  std::uint32_t response_token_count = 0;
  bool eos_reached = true;
  /// Stored layer index of each activation row. All layers unless the record
  /// was read through a layer filter.
  std::vector<std::uint16_t> layers;
  /// layers.size() x hidden_dim, row-major.
  std::vector<float> activations;

  std::size_t row_count() const { return layers.size(); }

  std::span<const float> row(std::size_t i, std::size_t hidden_dim) const {
    return std::span<const float>(activations).subspan(i * hidden_dim, hidden_dim);
  }

  bool is_canonical() const { return truncation_offset < 0; }

  friend bool operator==(const ActivationRecord&, const ActivationRecord&) = default;
};

struct Manifest {
  std::string model_name;
  std::string task_id;
  std::uint16_t layer_count = 0;
  std::uint32_t hidden_dim = 0;
  std::uint64_t record_count = 0;
  std::string created;
  std::string exporter_version;
  std::string layer_convention;
  std::string sha256;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline void to_json(nlohmann::json& j, const Manifest& m) {
  j = nlohmann::json{{"model_name", m.model_name},
                     {"task_id", m.task_id},
                     {"layer_count", m.layer_count},
                     {"hidden_dim", m.hidden_dim},
                     {"record_count", m.record_count},
                     {"created", m.created},
                     {"exporter_version", m.exporter_version},
                     {"layer_convention", m.layer_convention},
                     {"sha256", m.sha256}};
}

inline void from_json(const nlohmann::json& j, Manifest& m) {
  j.at("model_name").get_to(m.model_name);
  j.at("task_id").get_to(m.task_id);
  j.at("layer_count").get_to(m.layer_count);
  j.at("hidden_dim").get_to(m.hidden_dim);
  j.at("record_count").get_to(m.record_count);
  m.created = j.value("created", "");
  m.exporter_version = j.value("exporter_version", "");
  m.layer_convention = j.value("layer_convention", "unspecified");
  j.at("sha256").get_to(m.sha256);
}

inline std::filesystem::path manifest_path_for(const std::filesystem::path& dataset) {
  return std::filesystem::path(dataset.string() + ".manifest.json");
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open manifest " + path.string());
  try {
    return nlohmann::json::parse(in).get<Manifest>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, "malformed manifest " + path.string() + ": " + e.what());
  }
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write manifest " + path.string());
  out << nlohmann::json(manifest).dump(2) << '\n';
}

struct WriteOptions {
  std::string exporter_version = kToolkitVersion;
  /// Whether layer 0 is the embedding output; the store does not interpret it.
  std::string layer_convention = "unspecified";
  /// Writes <path>.manifest.json next to the container when set.
  bool write_manifest_file = true;
};

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string encode_header(const DatasetHeader& h) {
  std::string out;
  out.append(kDatasetMagic, sizeof kDatasetMagic);
  binary::put<std::uint16_t>(out, h.version);
  binary::put_string(out, h.model_name);
  binary::put<std::uint16_t>(out, h.layer_count);
  binary::put<std::uint32_t>(out, h.hidden_dim);
  binary::put<std::uint64_t>(out, h.record_count);
  binary::put_string(out, h.task_id);
  return out;
}

inline constexpr std::uint8_t kFlagEos = 1;
inline constexpr std::uint8_t kFlagGold = 2;

inline std::string encode_record_meta(const ActivationRecord& r) {
  std::string out;
  binary::put<std::uint64_t>(out, r.example_id);
  binary::put<std::uint64_t>(out, r.group_id);
  binary::put<std::int64_t>(out, r.truncation_offset);
  binary::put<std::uint32_t>(out, r.response_token_count);
  std::uint8_t flags = 0;
  if (r.eos_reached) flags |= kFlagEos;
  if (r.gold_label) flags |= kFlagGold;
  binary::put<std::uint8_t>(out, flags);
  binary::put_string(out, r.prompt_text);
  binary::put_string(out, r.response_text);
  if (r.gold_label) binary::put_string(out, *r.gold_label);
  return out;
}

}  // namespace detail

/// Checks the per-record invariants a writer must enforce.
inline void check_record(const DatasetHeader& header, const ActivationRecord& r) {
  const std::size_t expected = std::size_t{header.layer_count} * header.hidden_dim;
  const bool full_rows = r.layers.empty() || r.layers.size() == header.layer_count;
  if (!full_rows || r.activations.size() != expected) {
    fail(ErrorKind::kShape, "record example_id=" + std::to_string(r.example_id) + " has " +
                                std::to_string(r.activations.size()) + " activation values, expected " +
                                std::to_string(header.layer_count) + " x " + std::to_string(header.hidden_dim));
  }
  for (std::size_t i = 0; i < r.activations.size(); ++i) {
    if (!std::isfinite(r.activations[i])) {
      fail(ErrorKind::kValidation, "record example_id=" + std::to_string(r.example_id) +
                                       " has a non-finite activation at layer " +
                                       std::to_string(i / header.hidden_dim) + ", column " +
                                       std::to_string(i % header.hidden_dim));
    }
  }
  if (r.truncation_offset < -1 ||
      (r.truncation_offset >= 0 && static_cast<std::uint64_t>(r.truncation_offset) >= r.response_token_count)) {
    fail(ErrorKind::kValidation, "record example_id=" + std::to_string(r.example_id) + " truncation_offset " +
                                     std::to_string(r.truncation_offset) + " outside [-1, " +
                                     std::to_string(r.response_token_count) + ")");
  }
}

/// Streaming writer. The record count is fixed up front so the index can be
/// reserved and back-patched; output goes to a temporary sibling that is
/// renamed over the target on finish().
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path path, DatasetHeader header, WriteOptions options = {})
      : path_(std::move(path)),
        tmp_path_(path_.string() + ".partial"),
        header_(std::move(header)),
        options_(std::move(options)) {
    if (header_.layer_count < 1 || header_.hidden_dim < 1) {
      fail(ErrorKind::kShape, "header requires layer_count >= 1 and hidden_dim >= 1");
    }
    header_.version = kDatasetVersion;
    out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
    if (!out_) fail(ErrorKind::kIo, "cannot open " + tmp_path_.string() + " for writing");
    const std::string head = detail::encode_header(header_);
    out_.write(head.data(), static_cast<std::streamsize>(head.size()));
    index_pos_ = head.size();
    offsets_.reserve(header_.record_count);
    const std::string zeros(header_.record_count * 8, '\0');
    out_.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));
    position_ = index_pos_ + zeros.size();
    check_stream();
  }

  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  ~DatasetWriter() {
    if (!finished_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_path_, ec);
    }
  }

  void append(const ActivationRecord& record) {
    if (offsets_.size() >= header_.record_count) {
      fail(ErrorKind::kShape, "more records than the declared record_count " + std::to_string(header_.record_count));
    }
    check_record(header_, record);
    if (!seen_ids_.insert(record.example_id).second) {
      fail(ErrorKind::kValidation, "duplicate example_id " + std::to_string(record.example_id));
    }
    std::string buf = detail::encode_record_meta(record);
    binary::put_floats(buf, record.activations);
    offsets_.push_back(position_);
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    position_ += buf.size();
    check_stream();
  }

  Manifest finish() {
    if (offsets_.size() != header_.record_count) {
      fail(ErrorKind::kShape, "declared " + std::to_string(header_.record_count) + " records but wrote " +
                                  std::to_string(offsets_.size()));
    }
    std::string index;
    index.reserve(offsets_.size() * 8);
    for (auto off : offsets_) binary::put<std::uint64_t>(index, off);
    out_.seekp(static_cast<std::streamoff>(index_pos_));
    out_.write(index.data(), static_cast<std::streamsize>(index.size()));
    out_.close();
    if (!out_) fail(ErrorKind::kIo, "failed writing " + tmp_path_.string());
    std::error_code ec;
    std::filesystem::rename(tmp_path_, path_, ec);
    if (ec) fail(ErrorKind::kIo, "cannot move " + tmp_path_.string() + " to " + path_.string() + ": " + ec.message());
    finished_ = true;

    Manifest m;
    m.model_name = header_.model_name;
    m.task_id = header_.task_id;
    m.layer_count = header_.layer_count;
    m.hidden_dim = header_.hidden_dim;
    m.record_count = header_.record_count;
    m.created = detail::utc_timestamp();
    m.exporter_version = options_.exporter_version;
    m.layer_convention = options_.layer_convention;
    m.sha256 = sha256_file(path_);
    if (options_.write_manifest_file) save_manifest(manifest_path_for(path_), m);
    return m;
  }

 private:
  void check_stream() {
    if (!out_) fail(ErrorKind::kIo, "write failure on " + tmp_path_.string());
  }

  std::filesystem::path path_;
  std::filesystem::path tmp_path_;
  DatasetHeader header_;
  WriteOptions options_;
  std::ofstream out_;
  std::uint64_t index_pos_ = 0;
  std::uint64_t position_ = 0;
  std::vector<std::uint64_t> offsets_;
  std::unordered_set<std::uint64_t> seen_ids_;
  bool finished_ = false;
};

/// Writes header, index and records; record_count is taken from records.
inline Manifest write_dataset(DatasetHeader header, std::span<const ActivationRecord> records,
                              const std::filesystem::path& path, WriteOptions options = {}) {
  header.record_count = records.size();
  DatasetWriter writer(path, std::move(header), std::move(options));
  for (const auto& r : records) writer.append(r);
  return writer.finish();
}

/// Random-access byte source over a file.
class FileSource {
 public:
  explicit FileSource(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) fail(ErrorKind::kIo, "cannot open " + path.string());
    in_.seekg(0, std::ios::end);
    size_ = static_cast<std::uint64_t>(in_.tellg());
  }

  std::uint64_t size() const { return size_; }

  void read_at(std::uint64_t offset, std::span<std::byte> out) {
    if (offset > size_ || out.size() > size_ - offset) {
      fail(ErrorKind::kCorruption, "read of " + std::to_string(out.size()) + " bytes at byte offset " +
                                       std::to_string(offset) + " runs past end of file (size " +
                                       std::to_string(size_) + ")");
    }
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(offset));
    in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (static_cast<std::size_t>(in_.gcount()) != out.size()) {
      fail(ErrorKind::kIo, "short read at byte offset " + std::to_string(offset));
    }
  }

 private:
  std::ifstream in_;
  std::uint64_t size_ = 0;
};

template <typename S>
concept ByteSource = requires(S s, std::uint64_t off, std::span<std::byte> out) {
  { s.size() } -> std::convertible_to<std::uint64_t>;
  s.read_at(off, out);
};

struct ReadOptions {
  /// Stored layer indices to load; empty loads every layer.
  std::vector<std::uint16_t> layers;
  /// When set, the file's SHA-256 is checked against it before reading.
  std::optional<Manifest> manifest;
};

/// Streaming and random-access reader. Holds the header, the index and at
/// most one record at a time.
template <ByteSource Source = FileSource>
class BasicDatasetReader {
 public:
  explicit BasicDatasetReader(Source source, ReadOptions options = {})
      : source_(std::move(source)), options_(std::move(options)) {
    parse_header();
    if (options_.layers.empty()) {
      for (std::uint16_t l = 0; l < header_.layer_count; ++l) options_.layers.push_back(l);
    } else {
      std::sort(options_.layers.begin(), options_.layers.end());
      options_.layers.erase(std::unique(options_.layers.begin(), options_.layers.end()), options_.layers.end());
      if (options_.layers.back() >= header_.layer_count) {
        fail(ErrorKind::kShape, "layer " + std::to_string(options_.layers.back()) + " out of range for a file with " +
                                    std::to_string(header_.layer_count) + " layers");
      }
    }
  }

  const DatasetHeader& header() const { return header_; }
  const std::vector<std::uint16_t>& layers() const { return options_.layers; }
  std::uint64_t size() const { return header_.record_count; }

  /// Next record in stored order, or nullopt at the end.
  std::optional<ActivationRecord> next() {
    if (cursor_ >= header_.record_count) return std::nullopt;
    return read(cursor_++);
  }

  void rewind() { cursor_ = 0; }

  ActivationRecord read(std::uint64_t index) {
    if (index >= header_.record_count) {
      fail(ErrorKind::kShape, "record index " + std::to_string(index) + " out of range");
    }
    const std::uint64_t begin = offsets_[index];
    const std::uint64_t end = index + 1 < header_.record_count ? offsets_[index + 1] : source_.size();
    const std::uint64_t payload = std::uint64_t{header_.layer_count} * header_.hidden_dim * 4;
    if (end < begin || end - begin < payload + kFixedMeta || end > source_.size()) {
      fail(ErrorKind::kCorruption, "record " + std::to_string(index) + " at byte offset " + std::to_string(begin) +
                                       " has inconsistent extent (ends at " + std::to_string(end) +
                                       ", file size " + std::to_string(source_.size()) + ")");
    }
    const std::uint64_t meta_size = end - begin - payload;
    std::vector<std::byte> meta(meta_size);
    source_.read_at(begin, meta);
    binary::Cursor c(meta, begin);
    ActivationRecord r;
    r.example_id = c.get<std::uint64_t>();
    r.group_id = c.get<std::uint64_t>();
    r.truncation_offset = c.get<std::int64_t>();
    r.response_token_count = c.get<std::uint32_t>();
    const auto flags = c.get<std::uint8_t>();
    r.eos_reached = (flags & detail::kFlagEos) != 0;
    r.prompt_text = c.get_string();
    r.response_text = c.get_string();
    if (flags & detail::kFlagGold) r.gold_label = c.get_string();
    if (c.remaining() != 0) {
      fail(ErrorKind::kCorruption, "record " + std::to_string(index) + " metadata ends at byte offset " +
                                       std::to_string(c.absolute()) + " but activations start at " +
                                       std::to_string(begin + meta_size));
    }
    const std::uint64_t row_bytes = std::uint64_t{header_.hidden_dim} * 4;
    r.layers = options_.layers;
    r.activations.resize(r.layers.size() * header_.hidden_dim);
    // Contiguous layer runs are fetched with one read each.
    std::size_t i = 0;
    while (i < r.layers.size()) {
      std::size_t j = i + 1;
      while (j < r.layers.size() && r.layers[j] == r.layers[j - 1] + 1) ++j;
      const std::size_t rows = j - i;
      scratch_.resize(rows * row_bytes);
      source_.read_at(begin + meta_size + r.layers[i] * row_bytes, scratch_);
      activation_bytes_read_ += scratch_.size();
      binary::get_floats(scratch_, std::span<float>(r.activations).subspan(i * header_.hidden_dim,
                                                                          rows * header_.hidden_dim));
      i = j;
    }
    scratch_.clear();
    scratch_.shrink_to_fit();
    return r;
  }

  /// Total activation payload bytes fetched from the source so far.
  std::uint64_t activation_bytes_read() const { return activation_bytes_read_; }

  Source& source() { return source_; }

 private:
  static constexpr std::uint64_t kFixedMeta = 8 + 8 + 8 + 4 + 1 + 4 + 4;

  std::vector<std::byte> fetch(std::uint64_t offset, std::uint64_t n) {
    std::vector<std::byte> bytes(n);
    source_.read_at(offset, bytes);
    return bytes;
  }

  void parse_header() {
    const std::uint64_t size = source_.size();
    if (size < sizeof kDatasetMagic + 2) {
      fail(ErrorKind::kFormat, "file too small for a PLNPROBE header (" + std::to_string(size) + " bytes)");
    }
    auto magic = fetch(0, sizeof kDatasetMagic + 2);
    if (std::memcmp(magic.data(), kDatasetMagic, sizeof kDatasetMagic) != 0) {
      fail(ErrorKind::kFormat, "bad magic, expected PLNPROBE");
    }
    binary::Cursor vc(std::span<const std::byte>(magic).subspan(8), 8);
    header_.version = vc.get<std::uint16_t>();
    if (header_.version != kDatasetVersion) {
      fail(ErrorKind::kFormat, "unsupported version " + std::to_string(header_.version));
    }
    std::uint64_t pos = 10;
    header_.model_name = read_string(pos);
    auto fixed = fetch(pos, 2 + 4 + 8);
    binary::Cursor fc(fixed, pos);
    header_.layer_count = fc.get<std::uint16_t>();
    header_.hidden_dim = fc.get<std::uint32_t>();
    header_.record_count = fc.get<std::uint64_t>();
    pos += 14;
    header_.task_id = read_string(pos);
    if (header_.layer_count < 1 || header_.hidden_dim < 1) {
      fail(ErrorKind::kFormat, "header declares layer_count " + std::to_string(header_.layer_count) +
                                   " and hidden_dim " + std::to_string(header_.hidden_dim));
    }
    if (header_.record_count > (size - pos) / 8) {
      fail(ErrorKind::kCorruption, "record index of " + std::to_string(header_.record_count) +
                                       " entries at byte offset " + std::to_string(pos) + " exceeds file size " +
                                       std::to_string(size));
    }
    auto index = fetch(pos, header_.record_count * 8);
    binary::Cursor ic(index, pos);
    offsets_.resize(header_.record_count);
    std::uint64_t prev = pos + header_.record_count * 8;
    for (auto& off : offsets_) {
      off = ic.get<std::uint64_t>();
      if (off < prev || off > size) {
        fail(ErrorKind::kCorruption, "record index entry points to byte offset " + std::to_string(off) +
                                         " outside the record area [" + std::to_string(prev) + ", " +
                                         std::to_string(size) + "]");
      }
      prev = off;
    }
  }

  std::string read_string(std::uint64_t& pos) {
    auto len_bytes = fetch(pos, 4);
    binary::Cursor lc(len_bytes, pos);
    const auto len = lc.get<std::uint32_t>();
    auto bytes = fetch(pos + 4, len);
    pos += 4 + len;
    return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }

  Source source_;
  ReadOptions options_;
  DatasetHeader header_;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::byte> scratch_;
  std::uint64_t cursor_ = 0;
  std::uint64_t activation_bytes_read_ = 0;
};

using DatasetReader = BasicDatasetReader<FileSource>;

/// Opens a dataset for streaming. When options.manifest is set the file hash
/// and header mirror are verified first.
inline DatasetReader read_dataset(const std::filesystem::path& path, ReadOptions options = {}) {
  if (options.manifest) {
    const auto digest = sha256_file(path);
    if (digest != options.manifest->sha256) {
      fail(ErrorKind::kIntegrity, path.string() + " has SHA-256 " + digest + " but the manifest records " +
                                      options.manifest->sha256);
    }
  }
  DatasetReader reader(FileSource(path), options);
  if (options.manifest) {
    const auto& h = reader.header();
    const auto& m = *options.manifest;
    if (h.model_name != m.model_name || h.task_id != m.task_id || h.layer_count != m.layer_count ||
        h.hidden_dim != m.hidden_dim || h.record_count != m.record_count) {
      fail(ErrorKind::kIntegrity, "manifest fields do not mirror the header of " + path.string());
    }
  }
  return reader;
}

/// Convenience: every record of a file, in stored order.
inline std::vector<ActivationRecord> read_all(const std::filesystem::path& path, ReadOptions options = {}) {
  auto reader = read_dataset(path, std::move(options));
  std::vector<ActivationRecord> out;
  out.reserve(reader.size());
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { kWarning, kFatal };
enum class ValidationStatus { kClean = 0, kWarnings = 1, kFatal = 2 };

struct Finding {
  Severity severity = Severity::kWarning;
  std::optional<std::uint64_t> example_id;
  std::optional<std::uint64_t> byte_offset;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  ValidationStatus status() const {
    auto s = ValidationStatus::kClean;
    for (const auto& f : findings) {
      if (f.severity == Severity::kFatal) return ValidationStatus::kFatal;
      s = ValidationStatus::kWarnings;
    }
    return s;
  }
};

inline nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json findings = nlohmann::json::array();
  for (const auto& f : report.findings) {
    nlohmann::json j{{"severity", f.severity == Severity::kFatal ? "fatal" : "warning"}, {"message", f.message}};
    if (f.example_id) j["example_id"] = *f.example_id;
    if (f.byte_offset) j["byte_offset"] = *f.byte_offset;
    findings.push_back(std::move(j));
  }
  static constexpr const char* kNames[] = {"clean", "warnings", "fatal"};
  return {{"status", kNames[static_cast<int>(report.status())]}, {"findings", std::move(findings)}};
}

namespace detail {

inline std::optional<std::uint64_t> offset_in_message(const std::string& message) {
  static constexpr std::string_view kKey = "byte offset ";
  const auto pos = message.find(kKey);
  if (pos == std::string::npos) return std::nullopt;
  return std::stoull(message.substr(pos + kKey.size()));
}

}  // namespace detail

/// Walks the whole file and reports every problem it finds instead of throwing.
inline ValidationReport validate(const std::filesystem::path& path) {
  ValidationReport report;
  auto fatal = [&](const Error& e, std::optional<std::uint64_t> id = std::nullopt) {
    report.findings.push_back({Severity::kFatal, id, detail::offset_in_message(e.what()), e.what()});
  };
  std::optional<DatasetReader> reader;
  try {
    reader.emplace(FileSource(path));
  } catch (const Error& e) {
    fatal(e);
    return report;
  }
  const auto& h = reader->header();
  std::vector<std::uint64_t> ids;
  ids.reserve(h.record_count);
  for (std::uint64_t i = 0; i < h.record_count; ++i) {
    ActivationRecord r;
    try {
      r = reader->read(i);
    } catch (const Error& e) {
      fatal(e);
      // Later records may still be intact; keep going unless the tail is gone.
      if (e.kind() == ErrorKind::kIo) break;
      continue;
    }
    std::size_t bad = 0;
    std::size_t first_bad = 0;
    for (std::size_t k = 0; k < r.activations.size(); ++k) {
      if (!std::isfinite(r.activations[k])) {
        if (bad++ == 0) first_bad = k;
      }
    }
    if (bad > 0) {
      report.findings.push_back({Severity::kWarning, r.example_id, std::nullopt,
                                 "example_id " + std::to_string(r.example_id) + " has " + std::to_string(bad) +
                                     " non-finite activation(s), first at layer " +
                                     std::to_string(first_bad / h.hidden_dim) + ", column " +
                                     std::to_string(first_bad % h.hidden_dim)});
    }
    if (r.truncation_offset < -1 ||
        (r.truncation_offset >= 0 && static_cast<std::uint64_t>(r.truncation_offset) >= r.response_token_count)) {
      report.findings.push_back({Severity::kWarning, r.example_id, std::nullopt,
                                 "example_id " + std::to_string(r.example_id) + " truncation_offset " +
                                     std::to_string(r.truncation_offset) + " outside [-1, " +
                                     std::to_string(r.response_token_count) + ")"});
    }
    ids.push_back(r.example_id);
  }
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (ids[i] == ids[i - 1] && (i == 1 || ids[i - 2] != ids[i])) {
      report.findings.push_back({Severity::kWarning, ids[i], std::nullopt,
                                 "example_id " + std::to_string(ids[i]) + " appears more than once"});
    }
  }
  return report;
}

}  // namespace planprobe

#endif  // PLANPROBE_ACTIVATION_STORE_HPP
