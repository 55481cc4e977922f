#include <doctest.h>

#include <cstring>
#include <fstream>

#include "baitwatch/checkpoint.hpp"
#include "helpers.hpp"

using namespace baitwatch;

namespace {

ModelDims small() {
  ModelDims d;
  d.vocab_size = 30;
  d.embedding = 6;
  d.word_hidden = 5;
  d.paragraph_hidden = 4;
  d.conv_filters = 3;
  return d;
}

}  // namespace

TEST_CASE("checkpoint round-trip for every kind") {
  testing::TempDir dir("ckpt");
  const std::vector<Document> docs{{{2, 3}, {{4, 5, 6}, {7}}}, {{9}, {{10, 11, 12, 13, 14, 15}}}};
  for (auto kind : {ModelKind::rde, ModelKind::cde, ModelKind::hrde, ModelKind::ahde, ModelKind::hre}) {
    for (bool ip : {false, true}) {
      const auto m = Model<float>::create(kind, small(), ip, 5);
      const auto path = dir.file(std::string(to_string(kind)) + ".bwck");
      save_checkpoint(path, m);
      const auto back = load_checkpoint(path);
      CHECK(back.kind() == kind);
      CHECK(back.ip() == ip);
      CHECK(back.dims() == m.dims());
      CHECK(back.version() == m.version());
      for (const auto& [name, p] : m.tensors()) CHECK(back.tensors().at(name).value == p.value);
      for (const auto& d : docs) CHECK(back.score(d) == m.score(d));
      CHECK(serialize_checkpoint(back) == serialize_checkpoint(m));
    }
  }
}

TEST_CASE("checkpoint header layout") {
  const auto m = Model<float>::create(ModelKind::hre, small(), true, 1);
  const auto bytes = serialize_checkpoint(m);
  CHECK(bytes.substr(0, 4) == "BWCK");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == static_cast<char>(ModelKind::hre));
  CHECK(bytes[9] == 1);
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 10, 4);  // host is little-endian here
  CHECK(count == m.tensors().size());
  // first tensor in name order is body.para_gru.U_h
  std::uint16_t len = 0;
  std::memcpy(&len, bytes.data() + 14, 2);
  CHECK(bytes.substr(16, len) == m.tensors().begin()->first);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto m = Model<float>::create(ModelKind::hrde, small(), false, 2);
  const auto good = serialize_checkpoint(m);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(bad_magic), doctest::Contains("magic"), CheckpointError);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(bad_version), doctest::Contains("version"), CheckpointError);

  auto bad_kind = good;
  bad_kind[8] = 9;
  CHECK_THROWS_AS(deserialize_checkpoint(bad_kind), CheckpointError);

  auto wrong_kind = good;
  wrong_kind[8] = static_cast<char>(ModelKind::rde);
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(wrong_kind), doctest::Contains("model kind"), CheckpointError);

  auto bad_ip = good;
  bad_ip[9] = 3;
  CHECK_THROWS_AS(deserialize_checkpoint(bad_ip), CheckpointError);

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{9}, std::size_t{20}, good.size() / 2,
                          good.size() - 1}) {
    CAPTURE(cut);
    CHECK_THROWS_AS(deserialize_checkpoint(std::string_view(good).substr(0, cut)), CheckpointError);
  }
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(good + "x"), doctest::Contains("trailing"), CheckpointError);

  // a dimension blown up to 2^32-1 must fail cleanly, not allocate
  auto huge = good;
  const std::uint16_t len = static_cast<unsigned char>(huge[14]) | (static_cast<unsigned char>(huge[15]) << 8);
  const auto dim_at = 16 + len + 1;
  for (int i = 0; i < 4; ++i) huge[dim_at + i] = '\xff';
  CHECK_THROWS_AS(deserialize_checkpoint(huge), CheckpointError);
}

TEST_CASE("missing checkpoint file") {
  CHECK_THROWS(load_checkpoint("/nonexistent/model.bwck"));
}
