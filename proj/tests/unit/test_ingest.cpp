#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "liflab/ingest.hpp"
#include "liflab/network.hpp"
#include "liflab/xor_task.hpp"

using namespace liflab;
namespace fs = std::filesystem;

namespace {

// Test-side encoder for the 5-byte record layout, written independently of
// the parser.
std::vector<std::uint8_t> encode_nmnist(const std::vector<Event>& events) {
  std::vector<std::uint8_t> out;
  for (const auto& e : events) {
    out.push_back(static_cast<std::uint8_t>(e.x));
    out.push_back(static_cast<std::uint8_t>(e.y));
    out.push_back(static_cast<std::uint8_t>((e.polarity << 7) | ((e.timestamp >> 16) & 0x7F)));
    out.push_back(static_cast<std::uint8_t>((e.timestamp >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(e.timestamp & 0xFF));
  }
  return out;
}

std::vector<Event> random_events(std::size_t n, std::uint64_t seed, std::uint32_t tmax = (1u << 23) - 1) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> xy(0, 33), pol(0, 1);
  std::uniform_int_distribution<std::uint32_t> ts(0, tmax);
  std::vector<std::uint32_t> times(n);
  for (auto& t : times) t = ts(rng);
  std::sort(times.begin(), times.end());
  std::vector<Event> ev(n);
  for (std::size_t i = 0; i < n; ++i)
    ev[i] = {static_cast<std::uint16_t>(xy(rng)), static_cast<std::uint16_t>(xy(rng)),
             static_cast<std::uint8_t>(pol(rng)), times[i]};
  return ev;
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("liflab-ingest-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("nmnist record decoding") {
  const std::vector<std::uint8_t> one{0x0A, 0x05, 0x80, 0x00, 0x64};
  const auto s = parse_nmnist_events(one);
  REQUIRE(s.events.size() == 1);
  CHECK(s.events[0] == Event{10, 5, 1, 100});
  const std::vector<std::uint8_t> zero(5, 0);
  CHECK(parse_nmnist_events(zero).events[0] == Event{0, 0, 0, 0});
  const std::vector<std::uint8_t> top{0x21, 0x21, 0x7F, 0xFF, 0xFF};
  CHECK(parse_nmnist_events(top).events[0] == Event{33, 33, 0, (1u << 23) - 1});
}

TEST_CASE("nmnist encode-then-parse round trip") {
  const auto ev = random_events(10000, 42);
  const auto s = parse_nmnist_events(encode_nmnist(ev));
  CHECK(s.width == 34);
  CHECK(s.height == 34);
  CHECK(s.events == ev);
}

TEST_CASE("nmnist parse errors") {
  const std::vector<std::uint8_t> partial{0x01, 0x02, 0x03};
  CHECK_THROWS_AS(parse_nmnist_events(partial), FormatError);
  const std::vector<std::uint8_t> far{34, 0, 0, 0, 0};
  CHECK_THROWS_AS(parse_nmnist_events(far), FormatError);
  CHECK(parse_nmnist_events(std::vector<std::uint8_t>{}).events.empty());
  CHECK_THROWS_AS(read_nmnist_file("/nonexistent/liflab.bin"), FormatError);
}

TEST_CASE("parsing random bytes is total") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> byte(0, 255), len(0, 60);
  for (int k = 0; k < 500; ++k) {
    std::vector<std::uint8_t> b(static_cast<std::size_t>(len(rng)));
    for (auto& x : b) x = static_cast<std::uint8_t>(byte(rng));
    try {
      const auto s = parse_nmnist_events(b);
      CHECK(b.size() % 5 == 0);
      CHECK(s.events.size() == b.size() / 5);
    } catch (const FormatError&) {
    }
    try {
      parse_idx(b);
    } catch (const FormatError&) {
    }
  }
}

TEST_CASE("integrate_events bin boundaries") {
  EventStream s;
  s.events = {{1, 2, 0, 500}, {3, 4, 1, 1500}};
  const auto f = integrate_events(s, 1.0);
  REQUIRE(f.frames.steps() == 2);
  CHECK(f.frames.width == 2312);
  CHECK(f.frames.active[0] == std::vector<std::int32_t>{2 * 34 + 1});
  CHECK(f.frames.active[1] == std::vector<std::int32_t>{34 * 34 + 4 * 34 + 3});

  const auto one = integrate_events(s, 10.0);
  CHECK(one.frames.steps() == 1);
  CHECK(one.frames.total_active() == 2);

  EventStream dup;
  dup.events = {{1, 1, 0, 10}, {1, 1, 0, 20}, {1, 1, 0, 30}};
  CHECK(integrate_events(dup, 1.0).frames.total_active() == 1);
  const auto counted = integrate_events(dup, 1.0, true);
  CHECK(counted.frames.to_dense()(0, 35) == 3.0);

  const auto empty = integrate_events(EventStream{}, 3.0);
  CHECK(empty.frames.steps() == 1);
  CHECK(empty.frames.total_active() == 0);
  CHECK_THROWS_AS(integrate_events(s, 0.0), ConfigError);
}

TEST_CASE("integration properties on random streams") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EventStream s;
    s.events = random_events(2000, seed, 300000);
    const auto fine = integrate_events(s, 1.0);
    const auto coarse = integrate_events(s, 10.0);
    CHECK(fine.frames.total_active() >= coarse.frames.total_active());
    CHECK(fine.frames.total_active() <= s.events.size());
    CHECK(fine.frames.steps() == static_cast<int>(std::ceil(s.duration_us() / 1000.0)));
    // Re-integrating the frames as events reproduces them.
    for (const auto* f : {&fine, &coarse}) {
      const auto again = integrate_events(frames_to_events(*f, 34, 34), f->dt_ms);
      CHECK(again.frames == f->frames);
    }
  }
}

TEST_CASE("idx parsing") {
  std::vector<std::uint8_t> labels;
  put_be32(labels, 0x801);
  put_be32(labels, 3);
  labels.insert(labels.end(), {7, 2, 1});
  const auto l = std::get<IdxLabels>(parse_idx(labels));
  CHECK(l.labels == std::vector<int>{7, 2, 1});

  std::vector<std::uint8_t> images;
  put_be32(images, 0x803);
  put_be32(images, 2);
  put_be32(images, 2);
  put_be32(images, 2);
  images.insert(images.end(), {255, 0, 128, 0, 0, 0, 0, 255});
  const auto im = std::get<IdxImages>(parse_idx(images));
  CHECK(im.count() == 2);
  CHECK(im.rows == 2);
  CHECK(im.pixels(0, 0) == 1.0);
  CHECK(im.pixels(0, 1) == 0.0);
  CHECK(im.pixels(0, 2) == doctest::Approx(128.0 / 255));
  CHECK(im.pixels(1, 3) == 1.0);

  auto truncated = images;
  truncated.pop_back();
  CHECK_THROWS_AS(parse_idx(truncated), FormatError);
  auto bad = labels;
  bad[3] = 0x02;
  CHECK_THROWS_AS(parse_idx(bad), FormatError);
}

TEST_CASE("static image encoding") {
  Vector img = Vector::LinSpaced(5, 0.0, 1.0);
  const Matrix once = encode_static_image(img, 1);
  CHECK(once.rows() == 1);
  CHECK(Vector(once.row(0).transpose()) == img);
  CHECK(encode_static_image(Vector::Zero(4), 3).isZero());

  // Constant 0.6 through identity weights with complete leak fires every step.
  NetworkSpec s;
  s.input_width = 3;
  s.layers = {{3, false}};
  s.neuron = {0.0, true, 0.5, 0.5};
  auto net = init_network(s, 0);
  net.layers[0].feedforward = Matrix::Identity(3, 3);
  Dataset d;
  d.width = 3;
  d.samples.push_back({StaticCurrent{Vector::Constant(3, 0.6), 5}, 0});
  const auto idx = iota_indices(1);
  const auto r = forward_sequence(net, d.batch(idx));
  for (const auto& f : r.tape.layers[0].spikes.frames) CHECK(f.isOnes());

  d.samples[0] = {StaticCurrent{Vector::Zero(3), 5}, 0};
  CHECK(forward_sequence(net, d.batch(idx)).spike_counts.isZero());
}

TEST_CASE("nmnist directory and mnist files") {
  TempDir tmp;
  for (int digit : {0, 1}) {
    fs::create_directories(tmp.path / std::to_string(digit));
    for (int k = 0; k < 2; ++k) {
      const auto bytes = encode_nmnist(random_events(50, static_cast<std::uint64_t>(digit * 10 + k), 20000));
      std::ofstream(tmp.path / std::to_string(digit) / (std::to_string(k) + ".bin"), std::ios::binary)
          .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
  }
  const auto set = load_nmnist_split(tmp.path);
  CHECK(set.streams.size() == 4);
  CHECK(set.labels == std::vector<int>{0, 1, 0, 1});
  CHECK(load_nmnist_split(tmp.path, 2).labels == std::vector<int>{0, 1});
  const auto frames = frames_from_streams(set, 5.0);
  CHECK(frames.width == 2312);
  CHECK(frames.size() == 4);
  CHECK_NOTHROW(frames.validate());

  std::vector<std::uint8_t> images, labels;
  put_be32(images, 0x803);
  put_be32(images, 2);
  put_be32(images, 1);
  put_be32(images, 2);
  images.insert(images.end(), {255, 0, 0, 51});
  put_be32(labels, 0x801);
  put_be32(labels, 2);
  labels.insert(labels.end(), {7, 3});
  std::ofstream(tmp.path / "im", std::ios::binary).write(reinterpret_cast<const char*>(images.data()), 24);
  std::ofstream(tmp.path / "lb", std::ios::binary).write(reinterpret_cast<const char*>(labels.data()), 10);
  const auto mnist = load_mnist_split(tmp.path / "im", tmp.path / "lb", 8);
  REQUIRE(mnist.size() == 2);
  CHECK(mnist.samples[0].label == 7);
  CHECK(mnist.samples[1].steps() == 8);
  CHECK(std::get<StaticCurrent>(mnist.samples[1].input).intensity(1) == doctest::Approx(0.2));
}

TEST_CASE("spike csv and manifest") {
  TempDir tmp;
  std::ofstream(tmp.path / "a.csv") << "unit,time_s\n0,0.0\n3,0.0149\n3,0.0151\n";
  std::ofstream(tmp.path / "b.csv") << "1,0.002\n";
  std::ofstream(tmp.path / "manifest.csv") << "a.csv,4\nb.csv,1\n";
  const auto f = read_spike_csv(tmp.path / "a.csv", 5, 10.0);
  CHECK(f.steps() == 2);
  CHECK(f.active[0] == std::vector<std::int32_t>{0});
  CHECK(f.active[1] == std::vector<std::int32_t>{3});
  CHECK(read_spike_csv(tmp.path / "a.csv", 5, 10.0, true).to_dense()(1, 3) == 2.0);
  const auto d = load_spike_csv_manifest(tmp.path / "manifest.csv", 5, 10.0);
  CHECK(d.size() == 2);
  CHECK(d.samples[0].label == 4);
  CHECK(d.samples[1].label == 1);
  std::ofstream(tmp.path / "bad.csv") << "9,0.1\n";
  CHECK_THROWS_AS(read_spike_csv(tmp.path / "bad.csv", 5, 10.0), FormatError);
}

TEST_CASE("spike-frame file round trip") {
  const auto xor_data = generate_xor_dataset(XorTaskConfig{}, 12, 8);
  for (auto dtype : {FrameDtype::binary, FrameDtype::counts}) {
    std::stringstream buf;
    write_frame_file(buf, xor_data, dtype);
    CHECK(buf.str().substr(0, 4) == "SNNF");
    const auto back = read_frame_file(buf);
    CHECK(back.width == xor_data.width);
    CHECK(back.num_classes == 2);
    REQUIRE(back.size() == xor_data.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back.samples[i].label == xor_data.samples[i].label);
      CHECK(std::get<SparseFrames>(back.samples[i].input) == std::get<SparseFrames>(xor_data.samples[i].input));
    }
  }
  // Counts survive the count dtype and are clipped by the binary one.
  Dataset c;
  c.width = 2;
  c.num_classes = 1;
  Matrix m(1, 2);
  m << 3, 300;
  c.samples.push_back({SparseFrames::from_dense(m), 0});
  std::stringstream counts, bits;
  write_frame_file(counts, c, FrameDtype::counts);
  write_frame_file(bits, c, FrameDtype::binary);
  CHECK(std::get<SparseFrames>(read_frame_file(counts).samples[0].input).to_dense() == (Matrix(1, 2) << 3, 255).finished());
  CHECK(std::get<SparseFrames>(read_frame_file(bits).samples[0].input).to_dense() == (Matrix(1, 2) << 1, 1).finished());

  std::stringstream junk("SNNX....");
  CHECK_THROWS_AS(read_frame_file(junk), FormatError);
  std::stringstream cut(counts.str().substr(0, counts.str().size() - 1));
  CHECK_THROWS_AS(read_frame_file(cut), FormatError);
  Dataset st;
  st.width = 1;
  st.samples.push_back({StaticCurrent{Vector::Zero(1), 1}, 0});
  std::stringstream out;
  CHECK_THROWS_AS(write_frame_file(out, st), ConfigError);
}
