#include "fgan/trainer/config.hpp"

#include <fstream>
#include <json.hpp>

namespace fgan::trainer {

using nlohmann::json;

const char* normalize_mode_name(NormalizeMode m) { return m == NormalizeMode::Height128 ? "height-128" : "symbol-height"; }

NormalizeMode parse_normalize_mode(const std::string& name) {
  if (name == "height-128") return NormalizeMode::Height128;
  if (name == "symbol-height") return NormalizeMode::SymbolHeight;
  throw ConfigError("normalize_mode must be height-128 or symbol-height, got '" + name + "'");
}

void GANTrainConfig::validate() const {
  if (!(lr_d > 0) || !(lr_g > 0)) throw ConfigError("learning rates must be positive");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) throw ConfigError("Adam betas must lie in [0,1)");
  if (lambda < 0) throw ConfigError("lambda must be non-negative");
  if (max_iterations < 0 || batch_size < 1) throw ConfigError("iterations must be >= 0 and batch_size >= 1");
  if (input_height < 16 || input_height % 16 != 0) throw ConfigError("input_height must be a positive multiple of 16");
  if (max_width < 16 || max_tokens < 1) throw ConfigError("max_width and max_tokens must be positive");
  if (model_preset != "default" && model_preset != "tiny") throw ConfigError("model_preset must be default or tiny");
  if (task_preset != "small" && task_preset != "compact") throw ConfigError("task_preset must be small or compact");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

void SynthesisConfig::validate() const {
  if (max_pixel_area == 0) throw ConfigError("max_pixel_area must be positive");
  if (height < 16 || height % 16 != 0) throw ConfigError("synthesis height must be a positive multiple of 16");
}

void RecTrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0,1)");
  if (!(lr_decay_factor > 1)) throw ConfigError("lr_decay_factor must exceed 1");
  if (plateau_patience < 1) throw ConfigError("plateau_patience must be >= 1");
  if (symbol_height < 8) throw ConfigError("symbol_height must be >= 8");
  if (max_width < 0 || max_steps < 0 || steps_per_epoch < 0 || clip_norm < 0 || bn_batches < 0) throw ConfigError("negative limit");
  if (preset != "small" && preset != "large" && preset != "compact") throw ConfigError("preset must be small, large or compact");
}

namespace {

template <class Fields>
void merge(const std::string& text, const char* what, Fields&& fields) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (!fields(key, value)) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError(std::string(what) + ": bad value for '" + key + "': " + e.what());
    }
  }
}

#define FGAN_FIELD(name)     \
  if (key == #name) {        \
    value.get_to(c.name);    \
    return true;             \
  }

}  // namespace

std::string to_json(const GANTrainConfig& c) {
  return json{{"lr_d", c.lr_d},
              {"lr_g", c.lr_g},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"lambda", c.lambda},
              {"bidirectional", c.bidirectional},
              {"swap_target", c.swap_target},
              {"handwritten_source", c.handwritten_source},
              {"task_sees_real", c.task_sees_real},
              {"augment", c.augment},
              {"max_iterations", c.max_iterations},
              {"batch_size", c.batch_size},
              {"input_height", c.input_height},
              {"max_width", c.max_width},
              {"max_tokens", c.max_tokens},
              {"model_preset", c.model_preset},
              {"task_preset", c.task_preset},
              {"checkpoint_every", c.checkpoint_every},
              {"seed", c.seed}}
      .dump();
}

void merge_json(GANTrainConfig& c, const std::string& text) {
  merge(text, "gan config", [&](const std::string& key, const json& value) {
    FGAN_FIELD(lr_d) FGAN_FIELD(lr_g) FGAN_FIELD(beta1) FGAN_FIELD(beta2) FGAN_FIELD(lambda)
    FGAN_FIELD(bidirectional) FGAN_FIELD(swap_target) FGAN_FIELD(handwritten_source) FGAN_FIELD(task_sees_real)
    FGAN_FIELD(augment) FGAN_FIELD(max_iterations) FGAN_FIELD(batch_size) FGAN_FIELD(input_height)
    FGAN_FIELD(max_width) FGAN_FIELD(max_tokens) FGAN_FIELD(model_preset) FGAN_FIELD(task_preset)
    FGAN_FIELD(checkpoint_every) FGAN_FIELD(seed)
    return false;
  });
  c.validate();
}

std::string to_json(const SynthesisConfig& c) {
  return json{{"max_pixel_area", c.max_pixel_area},
              {"sample_fonts", c.sample_fonts},
              {"height", c.height},
              {"target", domain_name(c.target)},
              {"output_dir", c.output_dir.string()},
              {"seed", c.seed}}
      .dump();
}

void merge_json(SynthesisConfig& c, const std::string& text) {
  merge(text, "synthesis config", [&](const std::string& key, const json& value) {
    FGAN_FIELD(max_pixel_area) FGAN_FIELD(sample_fonts) FGAN_FIELD(height) FGAN_FIELD(seed)
    if (key == "target") {
      c.target = parse_domain(value.get<std::string>());
      return true;
    }
    if (key == "output_dir") {
      c.output_dir = value.get<std::string>();
      return true;
    }
    return false;
  });
  c.validate();
}

std::string to_json(const RecTrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"lr", c.lr},
              {"momentum", c.momentum},
              {"lr_decay_factor", c.lr_decay_factor},
              {"plateau_patience", c.plateau_patience},
              {"normalize_mode", normalize_mode_name(c.normalize_mode)},
              {"symbol_height", c.symbol_height},
              {"max_width", c.max_width},
              {"max_steps", c.max_steps},
              {"steps_per_epoch", c.steps_per_epoch},
              {"target_exprate", c.target_exprate},
              {"clip_norm", c.clip_norm},
              {"bn_batches", c.bn_batches},
              {"preset", c.preset},
              {"seed", c.seed}}
      .dump();
}

void merge_json(RecTrainConfig& c, const std::string& text) {
  merge(text, "recognizer config", [&](const std::string& key, const json& value) {
    FGAN_FIELD(batch_size) FGAN_FIELD(lr) FGAN_FIELD(momentum) FGAN_FIELD(lr_decay_factor)
    FGAN_FIELD(plateau_patience) FGAN_FIELD(symbol_height) FGAN_FIELD(max_width) FGAN_FIELD(max_steps)
    FGAN_FIELD(steps_per_epoch) FGAN_FIELD(target_exprate) FGAN_FIELD(clip_norm) FGAN_FIELD(bn_batches) FGAN_FIELD(preset) FGAN_FIELD(seed)
    if (key == "normalize_mode") {
      c.normalize_mode = parse_normalize_mode(value.get<std::string>());
      return true;
    }
    return false;
  });
  c.validate();
}

#undef FGAN_FIELD

void write_resolved(const std::filesystem::path& dir, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "config.resolved");
  if (!out) throw IoError("cannot write " + (dir / "config.resolved").string());
  out << json::parse(text).dump(2) << "\n";
}

}  // namespace fgan::trainer
