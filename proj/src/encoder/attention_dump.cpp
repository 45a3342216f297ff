// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "winoattn/binary_io.hpp"
#include "winoattn/encoder.hpp"
#include "winoattn/error.hpp"

namespace winoattn {

namespace {
constexpr std::string_view kMagic = "WDMP1";
}

std::string save_attention_dump(const std::string& example_id, const AttentionRecord& a, const MlmLogits* logits) {
  const auto expected = static_cast<std::size_t>(a.layers) * a.heads * a.seq_len * a.seq_len;
  if (a.values.size() != expected) throw ShapeError("dump: attention tensor size does not match its dims");
  if (logits && (logits->seq_len != a.seq_len ||
                 logits->values.size() != static_cast<std::size_t>(logits->seq_len) * logits->vocab))
    throw ShapeError("dump: logits shape does not match the attention sequence length");
  ByteWriter out;
  out.put_bytes(kMagic);
  out.put_string(example_id);
  out.put_string(a.model_tag);
  out.put_u32(static_cast<std::uint32_t>(a.layers));
  out.put_u32(static_cast<std::uint32_t>(a.heads));
  out.put_u32(static_cast<std::uint32_t>(a.seq_len));
  out.put_u32(logits ? static_cast<std::uint32_t>(logits->vocab) : 0u);
  out.put_f32s(a.values);
  if (logits) out.put_f32s(logits->values);
  return out.take();
}

AttentionDump import_attention_dump(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.remaining() < kMagic.size() || in.get_bytes(kMagic.size(), "magic") != kMagic)
    throw FormatError("dump: bad magic (expected WDMP1)");
  AttentionDump d;
  d.example_id = in.get_string("example id", 4096);
  const std::string tag = in.get_string("model tag", 4096);
  const auto L = in.get_u32("L"), H = in.get_u32("H"), n = in.get_u32("n"), V = in.get_u32("V");
  if (L == 0 || H == 0 || n == 0) throw ShapeError("dump: L, H and n must be positive");
  if (L > 1024 || H > 1024 || n > 8192 || V > (1u << 22)) throw ShapeError("dump: implausible dimensions");
  const auto cells = static_cast<std::size_t>(L) * H * n * n;
  if (in.remaining() < cells * 4)
    throw FormatError("dump: truncated attention tensor (need " + std::to_string(cells * 4) + " bytes, have " +
                      std::to_string(in.remaining()) + ")");
  d.attention = AttentionRecord(static_cast<int>(L), static_cast<int>(H), static_cast<int>(n));
  d.attention.provenance = Provenance::Imported;
  d.attention.model_tag = tag;
  in.get_f32s(d.attention.values, "attention tensor");
  if (V > 0) {
    MlmLogits lg;
    lg.seq_len = static_cast<int>(n);
    lg.vocab = static_cast<int>(V);
    lg.values.resize(static_cast<std::size_t>(n) * V);
    in.get_f32s(lg.values, "logits block");
    for (float v : lg.values)
      if (!std::isfinite(v)) throw FormatError("dump: non-finite logit");
    d.logits = std::move(lg);
  }
  if (!in.at_end()) throw FormatError("dump: trailing bytes after the last block");

  for (float v : d.attention.values) {
    if (!std::isfinite(v)) throw FormatError("dump: non-finite attention weight");
    if (v < 0.0f) throw FormatError("dump: negative attention weight");
  }
  const std::size_t rows = cells / n;
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = d.attention.values.data() + r * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += row[j];
    const double err = std::abs(s - 1.0);
    if (err <= kRowSumTolerance) continue;
    if (err > kImportRenormTolerance)
      throw FormatError("dump: attention row " + std::to_string(r) + " sums to " + std::to_string(s));
    for (std::size_t j = 0; j < n; ++j) row[j] = static_cast<float>(row[j] / s);
    d.attention.renormalized = true;
    ++d.attention.renormalized_rows;
  }
  return d;
}

}  // namespace winoattn
