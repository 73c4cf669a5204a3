// SPDX-License-Identifier: Apache-2.0
//
// Versioned binary checkpoint container. Layout, all integers and doubles
// little-endian:
//
//   magic "DRGD" | u32 version | config (u64 embed, hidden, latent,
//   source_vocab, target_vocab, max_src_len, max_tgt_len; u8 mode) |
//   u64 parameter count | per parameter: u32 name length, name bytes,
//   u64 rows, u64 cols, rows*cols f64 values in row-major order.
//
// save/load round-trips are byte-identical.

#pragma once

#include <string>

#include "drgd/model.hpp"

namespace drgd {

void save_checkpoint(const std::string& path, ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace drgd
