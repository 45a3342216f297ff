// SPDX-License-Identifier: Apache-2.0
#include <map>

#include "winoattn/binary_io.hpp"
#include "winoattn/encoder.hpp"
#include "winoattn/error.hpp"

namespace winoattn {

namespace {

constexpr std::string_view kMagic = "WATN1";

struct TensorRef {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float>* data;
};

// Fixed tensor order and shapes for a config. Pointers refer into `w`.
std::vector<TensorRef> tensor_table(EncoderWeights& w) {
  const auto& c = w.config;
  const auto d = static_cast<std::uint32_t>(c.d_model);
  const auto f = static_cast<std::uint32_t>(c.d_ff);
  const auto v = static_cast<std::uint32_t>(c.vocab_size);
  std::vector<TensorRef> t;
  t.push_back({"token_embedding", {v, d}, &w.token_embedding});
  t.push_back({"position_embedding", {static_cast<std::uint32_t>(c.max_seq), d}, &w.position_embedding});
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    auto& l = w.layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    t.push_back({p + "ln1.gamma", {d}, &l.ln1_gamma});
    t.push_back({p + "ln1.beta", {d}, &l.ln1_beta});
    t.push_back({p + "wq", {d, d}, &l.wq});
    t.push_back({p + "bq", {d}, &l.bq});
    t.push_back({p + "wk", {d, d}, &l.wk});
    t.push_back({p + "bk", {d}, &l.bk});
    t.push_back({p + "wv", {d, d}, &l.wv});
    t.push_back({p + "bv", {d}, &l.bv});
    t.push_back({p + "wo", {d, d}, &l.wo});
    t.push_back({p + "bo", {d}, &l.bo});
    t.push_back({p + "ln2.gamma", {d}, &l.ln2_gamma});
    t.push_back({p + "ln2.beta", {d}, &l.ln2_beta});
    t.push_back({p + "w1", {d, f}, &l.w1});
    t.push_back({p + "b1", {f}, &l.b1});
    t.push_back({p + "w2", {f, d}, &l.w2});
    t.push_back({p + "b2", {d}, &l.b2});
  }
  t.push_back({"final.gamma", {d}, &w.final_gamma});
  t.push_back({"final.beta", {d}, &w.final_beta});
  t.push_back({"mlm_bias", {v}, &w.mlm_bias});
  return t;
}

std::string dims_str(const std::vector<std::uint32_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

}  // namespace

std::string save_weights(const EncoderWeights& w) {
  w.validate();
  EncoderWeights copy = w;
  auto table = tensor_table(copy);
  ByteWriter out;
  out.put_bytes(kMagic);
  const auto& c = w.config;
  for (int v : {c.layers, c.heads, c.d_model, c.d_ff, c.vocab_size, c.max_seq})
    out.put_u32(static_cast<std::uint32_t>(v));
  out.put_u32(static_cast<std::uint32_t>(table.size()));
  for (const auto& t : table) {
    out.put_string(t.name);
    out.put_u32(static_cast<std::uint32_t>(t.dims.size()));
    for (auto dim : t.dims) out.put_u32(dim);
    out.put_f32s(*t.data);
  }
  return out.take();
}

EncoderWeights load_weights(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.remaining() < kMagic.size() || in.get_bytes(kMagic.size(), "magic") != kMagic)
    throw FormatError("weights: bad magic (expected WATN1)");
  EncoderConfig c;
  c.layers = static_cast<int>(in.get_u32("config.layers"));
  c.heads = static_cast<int>(in.get_u32("config.heads"));
  c.d_model = static_cast<int>(in.get_u32("config.d_model"));
  c.d_ff = static_cast<int>(in.get_u32("config.d_ff"));
  c.vocab_size = static_cast<int>(in.get_u32("config.vocab_size"));
  c.max_seq = static_cast<int>(in.get_u32("config.max_seq"));
  c.validate();
  if (c.layers > 4096 || c.d_model > (1 << 16) || c.d_ff > (1 << 18) || c.vocab_size > (1 << 24) ||
      c.max_seq > (1 << 16))
    throw ConfigError("weights: implausible config sizes");

  EncoderWeights w = EncoderWeights::zeros(c);
  auto table = tensor_table(w);
  std::map<std::string, TensorRef*> by_name;
  for (auto& t : table) by_name[t.name] = &t;

  const auto count = in.get_u32("tensor count");
  if (count != table.size())
    throw FormatError("weights: file has " + std::to_string(count) + " tensors, config implies " +
                      std::to_string(table.size()));
  std::map<std::string, bool> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = in.get_string("tensor name #" + std::to_string(i), 256);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("weights: unexpected tensor '" + name + "'");
    if (seen[name]) throw FormatError("weights: duplicate tensor '" + name + "'");
    seen[name] = true;
    auto& t = *it->second;
    const auto ndim = in.get_u32(name + " ndim");
    if (ndim > 8) throw FormatError("weights: " + name + " has implausible rank " + std::to_string(ndim));
    std::vector<std::uint32_t> dims(ndim);
    for (auto& dim : dims) dim = in.get_u32(name + " dims");
    if (dims != t.dims)
      throw ShapeError("weights: tensor " + name + " has dims " + dims_str(dims) + ", header implies " +
                       dims_str(t.dims));
    in.get_f32s(*t.data, "tensor " + name);
  }
  if (!in.at_end()) throw FormatError("weights: trailing bytes after the last tensor");
  return w;
}

}  // namespace winoattn
