#include <doctest.h>

#include <cstring>
#include <fstream>

#include "dcnn/builders.hpp"
#include "dcnn/checkpoint.hpp"
#include "gradcheck.hpp"
#include "testutil.hpp"

using namespace dcnn;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save/load round trip is bitwise on params, stats and flags") {
  test::TempDir tmp("ckpt");
  ModelSpec spec = build_diacnn(4, 2);
  ParamStore params;
  BnStats stats;
  init_params(spec, 7, params, stats);
  params.entry("stem.conv.w").trainable = false;
  // make running stats nontrivial
  stats["stem.bn"].running_mean.fill(0.25f);
  stats["stem.bn"].running_var.fill(1.75f);

  const std::string path = tmp.str("model.ckpt");
  save_checkpoint(spec, params, stats, path);
  auto loaded = load_checkpoint(path);

  CHECK(loaded.params.size() == params.size());
  for (const auto& [name, e] : params.entries()) {
    const auto& l = loaded.params.entry(name);
    CHECK(l.trainable == e.trainable);
    REQUIRE(l.var->value.shape() == e.var->value.shape());
    CHECK(std::memcmp(l.var->value.data(), e.var->value.data(),
                      e.var->value.size() * sizeof(float)) == 0);
  }
  for (const auto& [name, st] : stats) {
    REQUIRE(loaded.stats.count(name));
    CHECK(std::memcmp(loaded.stats[name].running_mean.data(), st.running_mean.data(),
                      st.running_mean.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(loaded.stats[name].running_var.data(), st.running_var.data(),
                      st.running_var.size() * sizeof(float)) == 0);
  }
  CHECK(param_checksum(loaded.params) == param_checksum(params));
}

TEST_CASE("save -> load -> forward is bitwise identical to pre-save forward") {
  test::TempDir tmp("ckpt_fwd");
  ModelSpec spec = build_diacnn(4, 2);
  ParamStore params;
  BnStats stats;
  init_params(spec, 11, params, stats);

  Tensor batch = test::random_tensor<float>({2, 3, 32, 32}, 12);
  auto before = forward(spec, params, stats, batch, BnMode::Infer);

  const std::string path = tmp.str("model.ckpt");
  save_checkpoint(spec, params, stats, path);
  auto loaded = load_checkpoint(path);
  auto after = forward(loaded.model, loaded.params, loaded.stats, batch, BnMode::Infer);

  CHECK(std::memcmp(before.probs->value.data(), after.probs->value.data(),
                    before.probs->value.size() * sizeof(float)) == 0);
}

TEST_CASE("corrupted magic is a distinct error with no partial load") {
  test::TempDir tmp("ckpt_magic");
  ModelSpec spec = build_diacnn(4, 2);
  ParamStore params;
  BnStats stats;
  init_params(spec, 13, params, stats);
  const std::string path = tmp.str("model.ckpt");
  save_checkpoint(spec, params, stats, path);

  std::string bytes = slurp(path);
  bytes[0] = 'X';
  spit(path, bytes);
  try {
    load_checkpoint(path);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::BadMagic);
  }
}

TEST_CASE("version, truncation and dims mismatches are distinct errors") {
  test::TempDir tmp("ckpt_err");
  ModelSpec spec = build_diacnn(4, 2);
  ParamStore params;
  BnStats stats;
  init_params(spec, 17, params, stats);
  const std::string path = tmp.str("model.ckpt");
  save_checkpoint(spec, params, stats, path);
  const std::string good = slurp(path);

  std::string versioned = good;
  versioned[4] = 9;  // little-endian u32 version
  spit(path, versioned);
  try {
    load_checkpoint(path);
    FAIL("expected version error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::Version);
  }

  spit(path, good.substr(0, good.size() / 2));
  try {
    load_checkpoint(path);
    FAIL("expected truncation error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::Truncated);
  }

  // flip one dim of the first array: product no longer matches numel.
  // layout after header+arch: u64 count, u32 name_len, name, u8 flags, u32 rank, dims...
  std::size_t at = 4 + 4;
  auto u64_at = [&good](std::size_t pos) {
    std::uint64_t v = 0;
    std::memcpy(&v, good.data() + pos, 8);
    return v;
  };
  const std::uint64_t arch_len = u64_at(at);
  at += 8 + arch_len + 8;
  const std::uint32_t name_len = static_cast<unsigned char>(good[at]);
  at += 4 + name_len + 1;
  std::string mismatched = good;
  mismatched[at + 4] = static_cast<char>(mismatched[at + 4] + 1);  // first dim low byte
  spit(path, mismatched);
  try {
    load_checkpoint(path);
    FAIL("expected dims mismatch error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::DimsMismatch);
  }
}

TEST_CASE("fixture from the reference writer loads with the pinned checksum") {
  auto loaded = load_checkpoint(test::data_file("ref_checkpoint.ckpt"));
  CHECK(loaded.model.preset == "fixture");
  CHECK(loaded.model.num_classes == 2);
  CHECK(loaded.params.size() == 6);
  CHECK_FALSE(loaded.params.entry("bn.beta").trainable);
  CHECK(loaded.params.entry("fc.w").trainable);
  REQUIRE(loaded.stats.count("bn"));
  CHECK(loaded.stats["bn"].running_var[1] == 0.75f);
  // frozen from scripts/make_ref_checkpoint.py
  CHECK(param_checksum(loaded.params) == 0xaede5b21c9b43ec4ull);

  // the fixture is a working model: forward runs
  Tensor batch = test::random_tensor<float>({2, 3, 4, 4}, 19);
  auto fwd = forward(loaded.model, loaded.params, loaded.stats, batch, BnMode::Infer);
  CHECK(fwd.probs->value.all_finite());
}

TEST_CASE("trailing bytes are rejected") {
  test::TempDir tmp("ckpt_trail");
  ModelSpec spec = build_diacnn(4, 2);
  ParamStore params;
  BnStats stats;
  init_params(spec, 23, params, stats);
  const std::string path = tmp.str("model.ckpt");
  save_checkpoint(spec, params, stats, path);
  spit(path, slurp(path) + "zzz");
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
}

}  // TEST_SUITE
