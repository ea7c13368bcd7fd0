#ifndef KGRELEX_CHECKPOINT_HPP
#define KGRELEX_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "kgrelex/error.hpp"
#include "kgrelex/ingestion.hpp"
#include "kgrelex/kg.hpp"
#include "kgrelex/linkpred.hpp"
#include "kgrelex/reasoning.hpp"

namespace kgrelex {

// Layout (all integers and floats little-endian, floats IEEE-754 binary32):
//
//   "KGRXCKPT"  u32 version
//   str config                       (u32 byte length + UTF-8; JSON echo)
//   u32 |E|, str * |E|               entity names by id
//   u32 |R|, str * |R|               relation names by id
//   u64 |T|, (u32 h, u32 r, u32 t, u8 provenance) * |T|
//   u32 d, u32 blocks, u8 decoder_only, u8 activation, u8 output_activation, u32 layers
//   f32 entity_emb[|E|*d], f32 relation_diag[|R|*d]
//   per layer: f32 W_r[d*d/blocks] for r in 0..|R|-1, then f32 W_0[d*d/blocks]
//   u32 |types|, str * |types|
//   u32 feature_dim, u32 depth, u32 hidden, u32 |R|
//   f32 hidden_w, f32 hidden_b, f32 weights, f32 bias   (sizes implied)
//   "END."
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json config = nlohmann::json::object();
  KnowledgeGraph graph;
  ModelParams model;
  ReasoningScorer scorer;
};

namespace detail {

class Writer {
public:
  void bytes(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  void floats(std::span<const float> v) {
    for (float x : v) f32(x);
  }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

class Reader {
public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n) {
    if (in_.size() - pos_ < n) throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
  std::uint32_t u32() {
    auto b = bytes(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = bytes(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(b[i])) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() { return std::string(bytes(u32())); }
  void floats(std::span<float> v) {
    for (float& x : v) x = f32();
  }
  bool done() const noexcept { return pos_ == in_.size(); }

private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kMagic = "KGRXCKPT";
constexpr std::string_view kTrailer = "END.";

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
  detail::Writer w;
  w.bytes(detail::kMagic);
  w.u32(Checkpoint::kVersion);
  w.str(ck.config.dump());

  const auto& g = ck.graph;
  w.u32(static_cast<std::uint32_t>(g.entities().size()));
  for (const auto& n : g.entities().names()) w.str(n);
  w.u32(static_cast<std::uint32_t>(g.relations().size()));
  for (const auto& n : g.relations().names()) w.str(n);
  const auto triples = g.triples();
  w.u64(triples.size());
  for (const auto& t : triples) {
    w.u32(t.head.value);
    w.u32(t.relation.value);
    w.u32(t.tail.value);
    w.u8(static_cast<std::uint8_t>(t.provenance));
  }

  const auto& m = ck.model;
  w.u32(static_cast<std::uint32_t>(m.dim));
  w.u32(static_cast<std::uint32_t>(m.blocks));
  w.u8(m.decoder_only);
  w.u8(static_cast<std::uint8_t>(m.activation));
  w.u8(static_cast<std::uint8_t>(m.output_activation));
  w.u32(static_cast<std::uint32_t>(m.layers.size()));
  m.visit([&](std::span<const float> s) { w.floats(s); });

  const auto& s = ck.scorer;
  w.u32(static_cast<std::uint32_t>(s.spec.types.size()));
  for (const auto& t : s.spec.types) w.str(t);
  w.u32(static_cast<std::uint32_t>(s.feature_dim));
  w.u32(static_cast<std::uint32_t>(s.depth));
  w.u32(static_cast<std::uint32_t>(s.hidden));
  w.u32(static_cast<std::uint32_t>(s.n_relations()));
  s.visit([&](std::span<const float> v) { w.floats(v); });
  w.bytes(detail::kTrailer);
  return w.take();
}

inline Checkpoint decode_checkpoint(std::string_view data) {
  detail::Reader r(data);
  if (r.bytes(detail::kMagic.size()) != detail::kMagic) throw ParseError("not a checkpoint file (bad magic)");
  if (auto v = r.u32(); v != Checkpoint::kVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(v));
  Checkpoint ck;
  try {
    ck.config = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint config: ") + e.what());
  }

  const std::uint32_t ne = r.u32();
  for (std::uint32_t i = 0; i < ne; ++i)
    if (ck.graph.intern_entity(r.str()).value != i) throw ParseError("checkpoint entity vocabulary has duplicates");
  const std::uint32_t nr = r.u32();
  for (std::uint32_t i = 0; i < nr; ++i)
    if (ck.graph.intern_relation(r.str()).value != i) throw ParseError("checkpoint relation vocabulary out of order");
  const std::uint64_t nt = r.u64();
  for (std::uint64_t i = 0; i < nt; ++i) {
    Triple t;
    t.head = EntityId{r.u32()};
    t.relation = RelationId{r.u32()};
    t.tail = EntityId{r.u32()};
    t.provenance = provenance_from_index(r.u8());
    ck.graph.add_triple(t);
  }
  ck.graph.freeze_vocab();

  const std::uint32_t dim = r.u32();
  const std::uint32_t blocks = r.u32();
  const bool decoder_only = r.u8() != 0;
  const auto act = static_cast<Activation>(r.u8());
  const auto out_act = static_cast<Activation>(r.u8());
  const std::uint32_t layers = r.u32();
  if (dim == 0 || blocks == 0 || dim % blocks != 0) throw ParseError("checkpoint model header is inconsistent");
  ck.model = ModelParams(ne, nr, dim, layers, blocks, decoder_only, act, out_act);
  ck.model.visit([&](std::span<float> s) { r.floats(s); });

  FeatureSpec spec;
  const std::uint32_t ntypes = r.u32();
  for (std::uint32_t i = 0; i < ntypes; ++i) spec.types.push_back(r.str());
  const std::uint32_t fdim = r.u32();
  const std::uint32_t depth = r.u32();
  const std::uint32_t hidden = r.u32();
  const std::uint32_t srel = r.u32();
  if (srel != nr) throw ParseError("checkpoint scorer covers " + std::to_string(srel) + " relations, vocabulary has " +
                                   std::to_string(nr));
  ck.scorer = ReasoningScorer(std::move(spec), srel, fdim, depth, hidden);
  ck.scorer.visit([&](std::span<float> s) { r.floats(s); });
  if (r.bytes(detail::kTrailer.size()) != detail::kTrailer || !r.done())
    throw ParseError("checkpoint has trailing or missing bytes");
  return ck;
}

// Writes to a sibling temporary file, then renames over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path.string()));
}

}  // namespace kgrelex

#endif  // KGRELEX_CHECKPOINT_HPP
