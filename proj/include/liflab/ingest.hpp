#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "liflab/dataset.hpp"

namespace liflab {

struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint8_t polarity = 0;   // 0 = OFF, 1 = ON
  std::uint32_t timestamp = 0; // microseconds

  bool operator==(const Event&) const = default;
};

struct EventStream {
  int width = 34;
  int height = 34;
  std::vector<Event> events;  // timestamps nondecreasing

  // Throws FormatError on out-of-range coordinates or decreasing timestamps.
  void validate() const;
  // Span [0, last timestamp + 1us); 0 for an empty stream.
  std::uint64_t duration_us() const;
  int cells() const { return 2 * width * height; }
};

// N-MNIST .bin records, 5 bytes each:
//   byte0 = x, byte1 = y, byte2 bit7 = polarity,
//   byte2 bits6..0 : byte3 : byte4 = 23-bit big-endian timestamp (us).
// Throws FormatError on a trailing partial record or coordinates outside the
// 34x34 sensor.
EventStream parse_nmnist_events(std::span<const std::uint8_t> bytes);
EventStream read_nmnist_file(const std::filesystem::path& path);

// Frame k covers [k dt, (k+1) dt); cell index = polarity*W*H + y*W + x.
struct FrameSequence {
  SparseFrames frames;  // steps x (2 W H)
  double dt_ms = 1.0;
};

// Binarized by default (cell is 1 iff >= 1 event fell in the bin); `counts`
// keeps the per-bin event count instead. steps = ceil(duration / dt), at least
// one; an empty stream yields a single all-zero frame.
FrameSequence integrate_events(const EventStream& stream, double dt_ms, bool counts = false);

// Each active cell of frame k becomes one event at time k*dt.
EventStream frames_to_events(const FrameSequence& frames, int width, int height);

// MNIST IDX containers (big-endian).
struct IdxImages {
  int rows = 0;
  int cols = 0;
  Matrix pixels;  // count x (rows*cols), scaled to [0, 1]
  int count() const { return static_cast<int>(pixels.rows()); }
};
struct IdxLabels {
  std::vector<int> labels;
};

// Magic 0x00000803 -> images, 0x00000801 -> labels. FormatError otherwise or
// when the payload is truncated.
std::variant<IdxImages, IdxLabels> parse_idx(std::span<const std::uint8_t> bytes);
IdxImages read_idx_images(const std::filesystem::path& path);
IdxLabels read_idx_labels(const std::filesystem::path& path);

// Constant-current encoding: row t of the result is the image, for t < steps.
Matrix encode_static_image(const Vector& image, int steps);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

// Labeled raw event streams, kept so the same recordings can be re-binned at
// different dt.
struct StreamSet {
  std::vector<EventStream> streams;
  std::vector<int> labels;
  int num_classes = 10;
};

// Reads <dir>/<digit>/*.bin (official N-MNIST layout). Files are sorted within
// each class and classes are interleaved, so a limit yields a balanced subset.
StreamSet load_nmnist_split(const std::filesystem::path& dir, std::size_t limit = 0);
Dataset frames_from_streams(const StreamSet& set, double dt_ms, bool counts = false);

// MNIST images + labels as constant-current samples of `steps` steps.
Dataset load_mnist_split(const std::filesystem::path& images, const std::filesystem::path& labels, int steps,
                         std::size_t limit = 0);

// SHD/SSC flat conversion: each sample file has lines "unit_index,spike_time_seconds";
// the manifest has lines "path,label" (relative paths resolve against the
// manifest's directory). A header line is skipped if its first field is not numeric.
SparseFrames read_spike_csv(const std::filesystem::path& path, int units, double dt_ms, bool counts = false);
Dataset load_spike_csv_manifest(const std::filesystem::path& manifest, int units, double dt_ms,
                                std::size_t limit = 0, bool counts = false);

// Spike-frame container ("SNNF"), little-endian:
//   magic "SNNF" | u16 version=1 | u8 dtype (0 bit-packed binary, 1 u8 counts)
//   | u8 reserved | u32 max_steps | u32 width | u32 num_classes | u32 samples
//   then per sample: i32 label | u32 steps | payload
// Binary payload packs cell (t, i) at bit t*width + i, LSB first, padded to a
// whole byte per sample. Count payload is steps*width bytes, saturating at 255.
enum class FrameDtype : std::uint8_t { binary = 0, counts = 1 };
void write_frame_file(std::ostream& out, const Dataset& data, FrameDtype dtype = FrameDtype::binary);
void write_frame_file(const std::filesystem::path& path, const Dataset& data, FrameDtype dtype = FrameDtype::binary);
Dataset read_frame_file(std::istream& in);
Dataset read_frame_file(const std::filesystem::path& path);

}  // namespace liflab
