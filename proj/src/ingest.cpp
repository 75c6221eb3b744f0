#include "liflab/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <type_traits>

namespace liflab {

namespace fs = std::filesystem;

void EventStream::validate() const {
  std::uint32_t last = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.x >= width || e.y >= height)
      throw FormatError("event " + std::to_string(i) + " at (" + std::to_string(e.x) + ", " + std::to_string(e.y) +
                        ") is outside the " + std::to_string(width) + "x" + std::to_string(height) + " sensor");
    if (e.polarity > 1) throw FormatError("event " + std::to_string(i) + " has polarity " + std::to_string(e.polarity));
    if (e.timestamp < last) throw FormatError("event " + std::to_string(i) + " timestamp decreases");
    last = e.timestamp;
  }
}

std::uint64_t EventStream::duration_us() const {
  return events.empty() ? 0 : static_cast<std::uint64_t>(events.back().timestamp) + 1;
}

EventStream parse_nmnist_events(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 5 != 0)
    throw FormatError("N-MNIST stream has " + std::to_string(bytes.size()) + " bytes, not a multiple of 5");
  EventStream s;  // 34 x 34
  s.events.reserve(bytes.size() / 5);
  for (std::size_t off = 0; off < bytes.size(); off += 5) {
    Event e;
    e.x = bytes[off];
    e.y = bytes[off + 1];
    e.polarity = static_cast<std::uint8_t>(bytes[off + 2] >> 7);
    e.timestamp = (static_cast<std::uint32_t>(bytes[off + 2] & 0x7F) << 16) |
                  (static_cast<std::uint32_t>(bytes[off + 3]) << 8) | bytes[off + 4];
    if (e.x >= s.width || e.y >= s.height)
      throw FormatError("N-MNIST record " + std::to_string(off / 5) + " has coordinate (" + std::to_string(e.x) +
                        ", " + std::to_string(e.y) + ") outside 34x34");
    s.events.push_back(e);
  }
  return s;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

EventStream read_nmnist_file(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return parse_nmnist_events(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

FrameSequence integrate_events(const EventStream& stream, double dt_ms, bool counts) {
  if (!(dt_ms > 0)) throw ConfigError("integrate_events: dt must be > 0");
  const double dt_us = dt_ms * 1000.0;
  FrameSequence fs_out;
  fs_out.dt_ms = dt_ms;
  fs_out.frames.width = stream.cells();
  const auto duration = static_cast<double>(stream.duration_us());
  const int steps = std::max(1, static_cast<int>(std::ceil(duration / dt_us)));
  fs_out.frames.active.resize(static_cast<std::size_t>(steps));
  const int plane = stream.width * stream.height;
  for (const auto& e : stream.events) {
    const auto k = std::min(steps - 1, static_cast<int>(std::floor(e.timestamp / dt_us)));
    const std::int32_t cell = e.polarity * plane + e.y * stream.width + e.x;
    fs_out.frames.active[static_cast<std::size_t>(k)].push_back(cell);
  }
  for (auto& f : fs_out.frames.active) {
    std::sort(f.begin(), f.end());
    if (!counts) f.erase(std::unique(f.begin(), f.end()), f.end());
  }
  return fs_out;
}

EventStream frames_to_events(const FrameSequence& frames, int width, int height) {
  EventStream s;
  s.width = width;
  s.height = height;
  const int plane = width * height;
  const double dt_us = frames.dt_ms * 1000.0;
  for (int t = 0; t < frames.frames.steps(); ++t) {
    for (auto cell : frames.frames.active[static_cast<std::size_t>(t)]) {
      Event e;
      e.polarity = static_cast<std::uint8_t>(cell / plane);
      e.y = static_cast<std::uint16_t>((cell % plane) / width);
      e.x = static_cast<std::uint16_t>(cell % width);
      e.timestamp = static_cast<std::uint32_t>(std::llround(t * dt_us));
      s.events.push_back(e);
    }
  }
  return s;
}

namespace {

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) | b[off + 3];
}

}  // namespace

std::variant<IdxImages, IdxLabels> parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("IDX: truncated header");
  const std::uint32_t magic = be32(bytes, 0);
  const std::uint32_t count = be32(bytes, 4);
  if (magic == 0x00000801) {
    if (bytes.size() < 8ULL + count) throw FormatError("IDX labels: truncated payload");
    IdxLabels l;
    l.labels.assign(bytes.begin() + 8, bytes.begin() + 8 + count);
    return l;
  }
  if (magic == 0x00000803) {
    if (bytes.size() < 16) throw FormatError("IDX images: truncated header");
    IdxImages img;
    img.rows = static_cast<int>(be32(bytes, 8));
    img.cols = static_cast<int>(be32(bytes, 12));
    const std::uint64_t pixels = static_cast<std::uint64_t>(img.rows) * static_cast<std::uint64_t>(img.cols);
    if (bytes.size() < 16 + pixels * count) throw FormatError("IDX images: truncated payload");
    img.pixels.resize(count, static_cast<Eigen::Index>(pixels));
    for (std::uint32_t n = 0; n < count; ++n)
      for (std::uint64_t p = 0; p < pixels; ++p)
        img.pixels(n, static_cast<Eigen::Index>(p)) = bytes[16 + n * pixels + p] / 255.0;
    return img;
  }
  std::ostringstream msg;
  msg << "IDX: bad magic number 0x" << std::hex << magic;
  throw FormatError(msg.str());
}

IdxImages read_idx_images(const fs::path& path) {
  auto parsed = parse_idx(read_bytes(path));
  if (!std::holds_alternative<IdxImages>(parsed)) throw FormatError(path.string() + ": not an IDX image file");
  return std::get<IdxImages>(std::move(parsed));
}

IdxLabels read_idx_labels(const fs::path& path) {
  auto parsed = parse_idx(read_bytes(path));
  if (!std::holds_alternative<IdxLabels>(parsed)) throw FormatError(path.string() + ": not an IDX label file");
  return std::get<IdxLabels>(std::move(parsed));
}

Matrix encode_static_image(const Vector& image, int steps) {
  if (steps < 1) throw ConfigError("encode_static_image: steps must be >= 1");
  return image.transpose().replicate(steps, 1);
}

StreamSet load_nmnist_split(const fs::path& dir, std::size_t limit) {
  if (!fs::is_directory(dir)) throw ConfigError("N-MNIST directory not found: " + dir.string());
  std::map<int, std::vector<fs::path>> by_class;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (name.size() != 1 || name[0] < '0' || name[0] > '9') continue;
    auto& files = by_class[name[0] - '0'];
    for (const auto& f : fs::directory_iterator(entry.path()))
      if (f.path().extension() == ".bin") files.push_back(f.path());
    std::sort(files.begin(), files.end());
  }
  if (by_class.empty()) throw ConfigError("no class sub-directories 0..9 with .bin files under " + dir.string());
  StreamSet set;
  for (std::size_t i = 0;; ++i) {
    bool any = false;
    for (const auto& [label, files] : by_class) {
      if (i >= files.size()) continue;
      any = true;
      set.streams.push_back(read_nmnist_file(files[i]));
      set.labels.push_back(label);
      if (limit && set.streams.size() >= limit) return set;
    }
    if (!any) break;
  }
  return set;
}

Dataset frames_from_streams(const StreamSet& set, double dt_ms, bool counts) {
  Dataset ds;
  ds.num_classes = set.num_classes;
  ds.width = set.streams.empty() ? 2 * 34 * 34 : set.streams.front().cells();
  ds.samples.reserve(set.streams.size());
  for (std::size_t i = 0; i < set.streams.size(); ++i)
    ds.samples.push_back(Sample{integrate_events(set.streams[i], dt_ms, counts).frames, set.labels[i]});
  ds.validate();
  return ds;
}

Dataset load_mnist_split(const fs::path& images, const fs::path& labels, int steps, std::size_t limit) {
  const auto img = read_idx_images(images);
  const auto lab = read_idx_labels(labels);
  if (static_cast<std::size_t>(img.count()) != lab.labels.size())
    throw FormatError("MNIST: image and label counts differ");
  Dataset ds;
  ds.width = img.rows * img.cols;
  ds.num_classes = 10;
  std::size_t n = lab.labels.size();
  if (limit) n = std::min(n, limit);
  for (std::size_t i = 0; i < n; ++i)
    ds.samples.push_back(Sample{StaticCurrent{img.pixels.row(static_cast<Eigen::Index>(i)).transpose(), steps},
                                lab.labels[i]});
  return ds;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

}  // namespace

SparseFrames read_spike_csv(const fs::path& path, int units, double dt_ms, bool counts) {
  if (!(dt_ms > 0)) throw ConfigError("read_spike_csv: dt must be > 0");
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::pair<int, double>> spikes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    double unit = 0, time = 0;
    if (f.size() != 2 || !parse_number(f[0], unit) || !parse_number(f[1], time)) {
      if (lineno == 1) continue;  // header
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'unit_index,spike_time_seconds'");
    }
    if (unit < 0 || unit >= units || unit != std::floor(unit) || time < 0)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": unit or time out of range");
    spikes.emplace_back(static_cast<int>(unit), time);
  }
  double t_max = 0;
  for (const auto& s : spikes) t_max = std::max(t_max, s.second);
  const double dt_s = dt_ms / 1000.0;
  SparseFrames frames;
  frames.width = units;
  const int steps = spikes.empty() ? 1 : static_cast<int>(std::floor(t_max / dt_s)) + 1;
  frames.active.resize(static_cast<std::size_t>(steps));
  for (const auto& [unit, time] : spikes)
    frames.active[static_cast<std::size_t>(std::min(steps - 1, static_cast<int>(std::floor(time / dt_s))))]
        .push_back(unit);
  for (auto& f : frames.active) {
    std::sort(f.begin(), f.end());
    if (!counts) f.erase(std::unique(f.begin(), f.end()), f.end());
  }
  return frames;
}

Dataset load_spike_csv_manifest(const fs::path& manifest, int units, double dt_ms, std::size_t limit, bool counts) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot open manifest " + manifest.string());
  Dataset ds;
  ds.width = units;
  std::string line;
  int lineno = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    double label = 0;
    if (f.size() != 2 || !parse_number(f[1], label)) {
      if (lineno == 1) continue;
      throw FormatError(manifest.string() + ":" + std::to_string(lineno) + ": expected 'path,label'");
    }
    fs::path p = f[0];
    if (p.is_relative()) p = manifest.parent_path() / p;
    ds.samples.push_back(Sample{read_spike_csv(p, units, dt_ms, counts), static_cast<int>(label)});
    max_label = std::max(max_label, static_cast<int>(label));
    if (limit && ds.samples.size() >= limit) break;
  }
  ds.num_classes = max_label + 1;
  ds.validate();
  return ds;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((u >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw FormatError("SNNF: unexpected end of file");
    u |= static_cast<U>(static_cast<U>(c) << (8 * i));
  }
  return static_cast<T>(u);
}

}  // namespace

void write_frame_file(std::ostream& out, const Dataset& data, FrameDtype dtype) {
  data.validate();
  out.write("SNNF", 4);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  put_le<std::uint8_t>(out, 0);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.max_steps()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.width));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.num_classes));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
  const auto width = static_cast<std::size_t>(data.width);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto* frames = std::get_if<SparseFrames>(&data.samples[n].input);
    if (!frames) throw ConfigError("SNNF: sample " + std::to_string(n) + " is a static current, not spike frames");
    put_le<std::int32_t>(out, data.samples[n].label);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(frames->steps()));
    const std::size_t cells = static_cast<std::size_t>(frames->steps()) * width;
    if (dtype == FrameDtype::binary) {
      std::vector<std::uint8_t> bits((cells + 7) / 8, 0);
      for (std::size_t t = 0; t < frames->active.size(); ++t)
        for (auto i : frames->active[t]) {
          const std::size_t bit = t * width + static_cast<std::size_t>(i);
          bits[bit / 8] = static_cast<std::uint8_t>(bits[bit / 8] | (1u << (bit % 8)));
        }
      out.write(reinterpret_cast<const char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
    } else {
      std::vector<std::uint8_t> counts(cells, 0);
      for (std::size_t t = 0; t < frames->active.size(); ++t)
        for (auto i : frames->active[t]) {
          auto& c = counts[t * width + static_cast<std::size_t>(i)];
          if (c < 255) ++c;
        }
      out.write(reinterpret_cast<const char*>(counts.data()), static_cast<std::streamsize>(counts.size()));
    }
  }
  if (!out) throw FormatError("SNNF: write failed");
}

void write_frame_file(const fs::path& path, const Dataset& data, FrameDtype dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_frame_file(out, data, dtype);
}

Dataset read_frame_file(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "SNNF") throw FormatError("SNNF: bad magic");
  const auto version = get_le<std::uint16_t>(in);
  if (version != 1) throw FormatError("SNNF: unsupported version " + std::to_string(version));
  const auto dtype_raw = get_le<std::uint8_t>(in);
  if (dtype_raw > 1) throw FormatError("SNNF: unknown dtype " + std::to_string(dtype_raw));
  const auto dtype = static_cast<FrameDtype>(dtype_raw);
  get_le<std::uint8_t>(in);
  const auto max_steps = get_le<std::uint32_t>(in);
  Dataset ds;
  ds.width = static_cast<int>(get_le<std::uint32_t>(in));
  ds.num_classes = static_cast<int>(get_le<std::uint32_t>(in));
  const auto count = get_le<std::uint32_t>(in);
  const auto width = static_cast<std::size_t>(ds.width);
  ds.samples.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    const int label = get_le<std::int32_t>(in);
    const auto steps = get_le<std::uint32_t>(in);
    if (steps > max_steps) throw FormatError("SNNF: sample " + std::to_string(n) + " exceeds max_steps");
    const std::size_t cells = static_cast<std::size_t>(steps) * width;
    const std::size_t bytes = dtype == FrameDtype::binary ? (cells + 7) / 8 : cells;
    std::vector<std::uint8_t> buf(bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) throw FormatError("SNNF: truncated payload");
    SparseFrames f;
    f.width = ds.width;
    f.active.resize(steps);
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const int c = dtype == FrameDtype::binary ? (buf[cell / 8] >> (cell % 8)) & 1 : buf[cell];
      for (int k = 0; k < c; ++k) f.active[cell / width].push_back(static_cast<std::int32_t>(cell % width));
    }
    ds.samples.push_back(Sample{std::move(f), label});
  }
  ds.validate();
  return ds;
}

Dataset read_frame_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_frame_file(in);
}

}  // namespace liflab
