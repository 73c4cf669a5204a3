// SPDX-License-Identifier: Apache-2.0

#include "drgd/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace drgd::cli {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) {
    return "";
  }
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key +
                                "' needs an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key +
                                "' needs a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no") {
    return false;
  }
  throw std::invalid_argument("config: key '" + key +
                              "' needs true/false, got '" + value + "'");
}

// Shortest representation that round-trips the exact double.
std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

void Settings::set(const std::string& key, const std::string& value) {
  if (key == "mode") {
    decoder_mode_from_string(value);  // validates
    mode = value;
  } else if (key == "embed_dim") {
    embed_dim = parse_int(key, value);
  } else if (key == "hidden_dim") {
    hidden_dim = parse_int(key, value);
  } else if (key == "latent_dim") {
    latent_dim = parse_int(key, value);
  } else if (key == "max_src_len") {
    max_src_len = parse_int(key, value);
  } else if (key == "max_tgt_len") {
    max_tgt_len = parse_int(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_int(key, value);
  } else if (key == "epochs") {
    epochs = parse_int(key, value);
  } else if (key == "clip_norm") {
    clip_norm = parse_double(key, value);
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "kl_warmup_steps") {
    kl_warmup_steps = parse_int(key, value);
  } else if (key == "validate_every") {
    validate_every = parse_int(key, value);
  } else if (key == "patience") {
    patience = parse_int(key, value);
  } else if (key == "rho") {
    rho = parse_double(key, value);
  } else if (key == "adadelta_eps") {
    adadelta_eps = parse_double(key, value);
  } else if (key == "beam_size") {
    beam_size = parse_int(key, value);
  } else if (key == "token_mode") {
    data::token_mode_from_string(value);  // validates
    token_mode = value;
  } else if (key == "shared_vocab") {
    shared_vocab = parse_bool(key, value);
  } else if (key == "train_src") {
    train_src = value;
  } else if (key == "train_tgt") {
    train_tgt = value;
  } else if (key == "valid_src") {
    valid_src = value;
  } else if (key == "valid_tgt") {
    valid_tgt = value;
  } else if (key == "vocab_src") {
    vocab_src = value;
  } else if (key == "vocab_tgt") {
    vocab_tgt = value;
  } else if (key == "run_dir") {
    run_dir = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

std::map<std::string, std::string> Settings::to_map() const {
  return {
      {"mode", mode},
      {"embed_dim", std::to_string(embed_dim)},
      {"hidden_dim", std::to_string(hidden_dim)},
      {"latent_dim", std::to_string(latent_dim)},
      {"max_src_len", std::to_string(max_src_len)},
      {"max_tgt_len", std::to_string(max_tgt_len)},
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"clip_norm", format_double(clip_norm)},
      {"seed", std::to_string(seed)},
      {"kl_warmup_steps", std::to_string(kl_warmup_steps)},
      {"validate_every", std::to_string(validate_every)},
      {"patience", std::to_string(patience)},
      {"rho", format_double(rho)},
      {"adadelta_eps", format_double(adadelta_eps)},
      {"beam_size", std::to_string(beam_size)},
      {"token_mode", token_mode},
      {"shared_vocab", shared_vocab ? "true" : "false"},
      {"train_src", train_src},
      {"train_tgt", train_tgt},
      {"valid_src", valid_src},
      {"valid_tgt", valid_tgt},
      {"vocab_src", vocab_src},
      {"vocab_tgt", vocab_tgt},
      {"run_dir", run_dir},
  };
}

std::string Settings::resolved_text() const {
  std::ostringstream out;
  for (const auto& [key, value] : to_map()) {
    out << key << " = " << value << '\n';
  }
  return out.str();
}

ModelConfig Settings::model_config(Eigen::Index source_vocab,
                                   Eigen::Index target_vocab) const {
  ModelConfig mc;
  mc.embed_dim = embed_dim;
  mc.hidden_dim = hidden_dim;
  mc.latent_dim = latent_dim;
  mc.source_vocab = source_vocab;
  mc.target_vocab = target_vocab;
  mc.max_src_len = static_cast<std::size_t>(max_src_len);
  mc.max_tgt_len = static_cast<std::size_t>(max_tgt_len);
  mc.mode = decoder_mode_from_string(mode);
  return mc;
}

train::TrainConfig Settings::train_config() const {
  train::TrainConfig tc;
  tc.batch_size = static_cast<std::size_t>(batch_size);
  tc.epochs = static_cast<std::size_t>(epochs);
  tc.clip_norm = clip_norm;
  tc.seed = seed;
  tc.kl_warmup_steps = static_cast<std::size_t>(kl_warmup_steps);
  tc.validate_every = static_cast<std::size_t>(validate_every);
  tc.patience = static_cast<std::size_t>(patience);
  tc.rho = rho;
  tc.adadelta_eps = adadelta_eps;
  return tc;
}

void load_config_file(Settings& settings, const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw std::runtime_error("config: cannot read " + path);
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    const std::string text = trim(line);
    if (text.empty()) {
      continue;
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " of " + path + " is not key = value");
    }
    settings.set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
  }
}

std::string effective_run_dir(const Settings& settings) {
  const char* env = std::getenv("DRGD_RUN_DIR");
  if (env != nullptr && *env != '\0') {
    return env;
  }
  return settings.run_dir;
}

}  // namespace drgd::cli
