#include "t3s/segmodel.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "t3s/evalmetrics.hpp"
#include "t3s/ops.hpp"
#include "t3s/rng.hpp"

namespace t3s {
namespace {

constexpr char kMagic[4] = {'T', '3', 'S', '1'};

ConvLayer make_conv(std::size_t cout, std::size_t cin, Rng& rng) {
  const double std_dev = std::sqrt(2.0 / static_cast<double>(cin * 9));
  std::vector<double> w(cout * cin * 9);
  for (auto& v : w) v = std_dev * standard_normal(rng);
  return {Tensor({cout, cin, 3, 3}, std::move(w), true), Tensor::zeros({cout}, true)};
}

Tensor conv_block(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add(conv2d(x, weight), bias);
}

struct AdamState {
  std::vector<double> m, v;
};

class AdamW {
 public:
  AdamW(double lr, double weight_decay) : lr_(lr), wd_(weight_decay) {}

  void step(std::vector<Tensor>& params) {
    ++t_;
    state_.resize(params.size());
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor& p = params[k];
      AdamState& s = state_[k];
      if (s.m.empty()) {
        s.m.assign(p.numel(), 0.0);
        s.v.assign(p.numel(), 0.0);
      }
      auto data = p.mutable_data();
      auto grad = p.grad();
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double g = grad.empty() ? 0.0 : grad[i];
        s.m[i] = kBeta1 * s.m[i] + (1.0 - kBeta1) * g;
        s.v[i] = kBeta2 * s.v[i] + (1.0 - kBeta2) * g * g;
        data[i] -= lr_ * wd_ * data[i];
        data[i] -= lr_ * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + kEps);
      }
      p.zero_grad();
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  double wd_;
  std::size_t t_ = 0;
  std::vector<AdamState> state_;
};

std::vector<Tensor> trainable_tensors(const ModelParams& p, bool freeze_encoder, bool train_bank) {
  std::vector<Tensor> out;
  if (!freeze_encoder) {
    for (const auto& l : p.encoder) {
      out.push_back(l.weight);
      out.push_back(l.bias);
    }
  }
  for (const auto& l : p.decoder) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  if (train_bank) {
    out.push_back(p.bank.raw_mu);
    out.push_back(p.bank.raw_sigma);
  }
  if (p.lora_enabled) {
    for (const auto& a : p.adapters) {
      out.push_back(a.a);
      out.push_back(a.b);
    }
  }
  return out;
}

void set_trainable_flags(ModelParams& p, bool freeze_encoder, bool train_bank) {
  for (auto& l : p.encoder) {
    l.weight.set_requires_grad(!freeze_encoder);
    l.bias.set_requires_grad(!freeze_encoder);
  }
  for (auto& t : trainable_tensors(p, freeze_encoder, train_bank)) t.set_requires_grad(true);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::vector<char> bytes, std::string file) : bytes_(std::move(bytes)), file_(std::move(file)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(file_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated checkpoint");
  }
  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    }
    return v;
  }
  std::string str() {
    const auto n = static_cast<std::size_t>(uint(4));
    if (n > 4096) fail("implausible string length");
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  double f64() {
    const std::uint64_t bits = uint(8);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

  std::size_t pos_ = 0;

 private:
  std::vector<char> bytes_;
  std::string file_;
};

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

std::string_view style_mode_name(StyleMode mode) {
  return mode == StyleMode::kAlways ? "always" : "off";
}

StyleMode parse_style_mode(std::string_view name) {
  if (name == "always") return StyleMode::kAlways;
  if (name == "off") return StyleMode::kOff;
  throw Error("unknown style mode '" + std::string(name) + "' (expected always or off)");
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named_tensors() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    out.emplace_back("enc" + std::to_string(i) + ".weight", encoder[i].weight);
    out.emplace_back("enc" + std::to_string(i) + ".bias", encoder[i].bias);
  }
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    out.emplace_back("dec" + std::to_string(i) + ".weight", decoder[i].weight);
    out.emplace_back("dec" + std::to_string(i) + ".bias", decoder[i].bias);
  }
  out.emplace_back("bank.raw_mu", bank.raw_mu);
  out.emplace_back("bank.raw_sigma", bank.raw_sigma);
  for (const auto& a : adapters) {
    out.emplace_back("lora." + a.target + ".a", a.a);
    out.emplace_back("lora." + a.target + ".b", a.b);
  }
  return out;
}

std::uint64_t ModelParams::checksum() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& [name, t] : named_tensors()) {
    for (double d : t.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xFF;
        h *= 0x100000001B3ULL;
      }
    }
  }
  return h;
}

ModelParams ModelParams::clone() const {
  ModelParams c = *this;
  for (auto& l : c.encoder) {
    l.weight = l.weight.clone_leaf(l.weight.requires_grad());
    l.bias = l.bias.clone_leaf(l.bias.requires_grad());
  }
  for (auto& l : c.decoder) {
    l.weight = l.weight.clone_leaf(l.weight.requires_grad());
    l.bias = l.bias.clone_leaf(l.bias.requires_grad());
  }
  c.bank.raw_mu = bank.raw_mu.clone_leaf(bank.raw_mu.requires_grad());
  c.bank.raw_sigma = bank.raw_sigma.clone_leaf(bank.raw_sigma.requires_grad());
  for (auto& a : c.adapters) {
    a.a = a.a.clone_leaf(a.a.requires_grad());
    a.b = a.b.clone_leaf(a.b.requires_grad());
  }
  return c;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  if (config.channels < 1 || config.classes < 2) throw Error("init_params: invalid model shape");
  Rng rng(derive_seed(seed, "params"));
  ModelParams p;
  p.config = config;
  const std::size_t c = config.channels;
  p.encoder = {make_conv(c, 3, rng), make_conv(c, c, rng), make_conv(c, c, rng)};
  p.decoder = {make_conv(c, c, rng), make_conv(config.classes, c, rng)};
  p.bank = init_bank(config.bases, c, derive_seed(seed, "bank"));
  return p;
}

std::vector<LoraAdapter> make_adapters(const ModelParams& params, std::size_t rank, double alpha,
                                       std::uint64_t seed) {
  if (rank < 1) throw Error("make_adapters: rank must be at least 1");
  Rng rng(derive_seed(seed, "lora"));
  std::vector<LoraAdapter> out;
  for (std::size_t i = 0; i < params.encoder.size(); ++i) {
    const Shape& s = params.encoder[i].weight.shape();
    const std::size_t fan_out = s[0], fan_in = s[1] * 9;
    const std::size_t r = std::min({rank, fan_in, fan_out});
    std::vector<double> a(r * fan_in);
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : a) v = std_dev * standard_normal(rng);
    out.push_back({"enc" + std::to_string(i), r, alpha, Tensor({r, fan_in}, std::move(a), true),
                   Tensor::zeros({fan_out, r}, true)});
  }
  return out;
}

Tensor lora_weight(const Tensor& base, const LoraAdapter& adapter) {
  const std::size_t fan_out = base.dim(0);
  const std::size_t fan_in = base.numel() / fan_out;
  if (adapter.a.rank() != 2 || adapter.b.rank() != 2 || adapter.a.dim(0) != adapter.rank ||
      adapter.b.dim(1) != adapter.rank || adapter.a.dim(1) != fan_in ||
      adapter.b.dim(0) != fan_out) {
    throw ShapeError("apply_lora: adapter " + adapter.target + " with A " +
                     shape_str(adapter.a.shape()) + " and B " + shape_str(adapter.b.shape()) +
                     " does not fit weight " + shape_str(base.shape()));
  }
  Tensor delta = mul(matmul(adapter.b, adapter.a), Tensor::scalar(adapter.scaling()));
  return add(base, reshape(delta, base.shape()));
}

ModelParams apply_lora(const ModelParams& params, const std::vector<LoraAdapter>& adapters,
                       bool enabled) {
  ModelParams out = params;
  if (!enabled) return out;
  for (const auto& a : adapters) {
    bool matched = false;
    for (std::size_t i = 0; i < out.encoder.size(); ++i) {
      if (a.target == "enc" + std::to_string(i)) {
        out.encoder[i].weight = lora_weight(out.encoder[i].weight, a);
        matched = true;
      }
    }
    if (!matched) throw ShapeError("apply_lora: unknown target layer '" + a.target + "'");
  }
  return out;
}

Tensor encode(const Tensor& image, const ModelParams& params) {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) % 4 != 0 || image.dim(2) % 4 != 0) {
    throw ShapeError("encode: expected a (3, H, W) image with H, W multiples of 4, got " +
                     shape_str(image.shape()));
  }
  const Tensor weight = params.lora_enabled
                            ? apply_lora(params, params.adapters, true).encoder[0].weight
                            : params.encoder[0].weight;
  return avg_pool2(conv_block(image, weight, params.encoder[0].bias));
}

HookResult style_hook(const Tensor& feature, const StyleBank& bank, StyleMode mode) {
  auto [pre, content] = decompose(feature);
  if (mode == StyleMode::kOff) return {feature, pre, pre, {}};
  Projection proj = project_style(pre, bank);
  return {recompose(proj.style, content), pre, proj.style, proj.weights};
}

Tensor decode(const Tensor& feature, const ModelParams& params) {
  const ModelParams eff =
      params.lora_enabled ? apply_lora(params, params.adapters, true) : params;
  Tensor x = feature;
  for (std::size_t i = 1; i < eff.encoder.size(); ++i) {
    x = conv_block(relu(x), eff.encoder[i].weight, eff.encoder[i].bias);
  }
  for (const auto& l : eff.decoder) x = conv_block(relu(x), l.weight, l.bias);
  return upsample2(x);
}

ForwardPass forward(const Tensor& image, const ModelParams& params) {
  const ModelParams eff =
      params.lora_enabled ? apply_lora(params, params.adapters, true) : params;
  ModelParams plain = eff;
  plain.lora_enabled = false;
  HookResult hook = style_hook(encode(image, plain), eff.bank, eff.config.mode);
  Tensor logits = decode(hook.feature, plain);
  return {logits, hook};
}

Tensor seg_loss(const Tensor& logits, const Tensor& soft_target) {
  if (logits.shape() != soft_target.shape() || logits.rank() != 3) {
    throw ShapeError("seg_loss: logits " + shape_str(logits.shape()) + " vs target " +
                     shape_str(soft_target.shape()));
  }
  const double pixels = static_cast<double>(logits.dim(1) * logits.dim(2));
  return mul(sum(mul(soft_target, log_softmax(logits, 0))), Tensor::scalar(-1.0 / pixels));
}

Tensor total_loss(const Tensor& seg, const Tensor& sty, double lambda_sty) {
  if (lambda_sty < 0.0) throw Error("total_loss: lambda_sty must be non-negative");
  return add(seg, mul(sty, Tensor::scalar(lambda_sty)));
}

Tensor image_tensor(const Sample& s) { return Tensor({3, s.height, s.width}, s.image); }

Tensor target_tensor(const Sample& s) { return Tensor({s.classes, s.height, s.width}, s.soft_mask); }

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw Error("train: batch_size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw Error("train: learning_rate must be positive");
  if (cfg.weight_decay < 0.0) throw Error("train: weight_decay must be non-negative");
  if (cfg.lambda_sty < 0.0) throw Error("train: lambda_sty must be non-negative");
  if (cfg.mixup_prob < 0.0 || cfg.mixup_prob > 1.0) throw Error("train: mixup_prob outside [0, 1]");
  if (cfg.n_bases < 2) throw Error("train: n_bases must be at least 2");
  if (cfg.channels < 1) throw Error("train: channels must be positive");
}

TrainResult train(const std::vector<const DomainDataset*>& sources, const TrainConfig& cfg,
                  const std::vector<const DomainDataset*>& validation, const ModelParams* initial) {
  validate_train_config(cfg);
  struct Ref {
    std::size_t domain, index;
  };
  std::vector<Ref> pool;
  std::size_t classes = 0;
  for (std::size_t d = 0; d < sources.size(); ++d) {
    for (std::size_t i = 0; i < sources[d]->samples.size(); ++i) {
      const Sample& s = sources[d]->samples[i];
      if (classes == 0) classes = s.classes;
      if (s.classes != classes) throw Error("train: source domains disagree on class count");
      pool.push_back({d, i});
    }
  }
  if (pool.empty()) throw Error("train: need at least one source sample");

  ModelParams params;
  if (initial != nullptr) {
    params = initial->clone();
  } else {
    ModelConfig mc;
    mc.channels = cfg.channels;
    mc.classes = classes;
    mc.bases = cfg.n_bases;
    params = init_params(mc, cfg.seed);
  }
  params.config.mode = cfg.style_mode;
  // An unused bank is left alone so weight decay does not drift it.
  const bool train_bank = cfg.style_mode != StyleMode::kOff || cfg.lambda_sty != 0.0;
  set_trainable_flags(params, cfg.freeze_encoder, train_bank);
  std::vector<Tensor> trainable = trainable_tensors(params, cfg.freeze_encoder, train_bank);
  AdamW opt(cfg.learning_rate, cfg.weight_decay);

  Rng order_rng(derive_seed(cfg.seed, "order"));
  Rng mix_rng(derive_seed(cfg.seed, "mixup"));
  Rng lambda_rng(derive_seed(cfg.seed, "lambda"));
  const bool use_sty = cfg.lambda_sty > 0.0;

  TrainResult result;
  std::vector<std::size_t> perm(pool.size());
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[uniform_index(order_rng, i)]);
    }
    double seg_sum = 0.0, sty_sum = 0.0, total_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, perm.size());
      const bool mix = cfg.mixup_prob > 0.0 && uniform_open(mix_rng) < cfg.mixup_prob;
      try {
        Tensor seg;
        for (std::size_t b = start; b < end; ++b) {
          const Ref ref = pool[perm[b]];
          const Sample* sample = &sources[ref.domain]->samples[ref.index];
          Sample mixed;
          if (mix) {
            std::size_t partner = uniform_index(mix_rng, pool.size());
            if (cfg.cross_domain_mixup && sources.size() > 1) {
              while (pool[partner].domain == ref.domain) partner = uniform_index(mix_rng, pool.size());
            }
            const Ref pr = pool[partner];
            mixed = mixup(*sample, sources[pr.domain]->samples[pr.index], draw_lambda(lambda_rng));
            sample = &mixed;
          }
          const ForwardPass fp = forward(image_tensor(*sample), params);
          const Tensor l = seg_loss(fp.logits, target_tensor(*sample));
          seg = seg.defined() ? add(seg, l) : l;
        }
        seg = mul(seg, Tensor::scalar(1.0 / static_cast<double>(end - start)));
        const Tensor sty = use_sty ? orthogonality_loss(params.bank) : Tensor::scalar(0.0);
        const Tensor total = total_loss(seg, sty, cfg.lambda_sty);
        backward(total);
        opt.step(trainable);
        seg_sum += seg.item();
        sty_sum += sty.item();
        total_sum += total.item();
      } catch (const NumericError& err) {
        throw NumericError("train: non-finite value at epoch " + std::to_string(e + 1) +
                           ", step " + std::to_string(result.report.steps + 1) + ": " + err.what());
      }
      ++batches;
      ++result.report.steps;
    }
    EpochRecord rec;
    rec.epoch = e + 1;
    rec.l_seg = seg_sum / static_cast<double>(batches);
    rec.l_sty = sty_sum / static_cast<double>(batches);
    rec.total = total_sum / static_cast<double>(batches);
    if (!validation.empty()) {
      const SegScores s = evaluate_model(params, validation, cfg.validation_limit);
      rec.iou = s.iou;
      rec.dice = s.dice;
    } else {
      rec.iou = std::nan("");
      rec.dice = std::nan("");
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.epochs.push_back(rec);
  }
  result.params = std::move(params);
  return result;
}

TrainResult train_pipeline(const std::vector<const DomainDataset*>& sources,
                           const PipelineConfig& cfg,
                           const std::vector<const DomainDataset*>& validation) {
  if (!cfg.fm) return train(sources, cfg.train, validation);

  TrainConfig pre = cfg.train;
  pre.epochs = cfg.pretrain_epochs;
  pre.seed = derive_seed(cfg.train.seed, "pretrain");
  TrainResult base = train(sources, pre, {});

  ModelParams tuned = base.params.clone();
  tuned.adapters = make_adapters(tuned, cfg.lora_rank, cfg.lora_alpha, cfg.train.seed);
  tuned.lora_enabled = true;
  TrainConfig fine = cfg.train;
  fine.freeze_encoder = true;
  TrainResult out = train(sources, fine, validation, &tuned);
  out.report.steps += base.report.steps;
  return out;
}

Inference infer_test_time(const Sample& sample, const ModelParams& params) {
  NoGradGuard no_grad;
  const ForwardPass fp = forward(image_tensor(sample), params);
  const std::size_t k = fp.logits.dim(0);
  const std::size_t px = fp.logits.dim(1) * fp.logits.dim(2);
  auto logits = fp.logits.data();
  Inference out;
  out.mask.assign(px, 0);
  for (std::size_t i = 0; i < px; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (logits[c * px + i] > logits[best * px + i]) best = c;
    }
    out.mask[i] = static_cast<std::uint8_t>(best);
  }
  out.pre = fp.hook.pre;
  out.post = fp.hook.post;
  out.weights = fp.hook.weights;
  return out;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  auto entries = params.named_tensors();
  const ModelConfig& c = params.config;
  const double rank = params.adapters.empty() ? 0.0 : static_cast<double>(params.adapters.front().rank);
  const double alpha = params.adapters.empty() ? 0.0 : params.adapters.front().alpha;
  entries.insert(entries.begin(),
                 {"meta", Tensor::vector({static_cast<double>(c.channels), static_cast<double>(c.classes),
                                          static_cast<double>(c.bases),
                                          c.mode == StyleMode::kAlways ? 1.0 : 0.0,
                                          params.lora_enabled ? 1.0 : 0.0, rank, alpha})});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    put_str(out, name);
    put_str(out, "f64");
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put_u64(out, e);
  }
  for (const auto& [name, t] : entries) {
    for (double d : t.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof bits);
      put_u64(out, bits);
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path.string());
  r.need(4);
  for (char m : kMagic) {
    if (static_cast<char>(r.uint(1)) != m) r.fail("bad magic (expected T3S1)");
  }
  const auto count = static_cast<std::size_t>(r.uint(4));
  if (count > 1024) r.fail("implausible entry count");
  std::vector<std::pair<std::string, Shape>> manifest;
  for (std::size_t i = 0; i < count; ++i) {
    std::string name = r.str();
    if (r.str() != "f64") r.fail("unsupported dtype for " + name);
    const auto rank = static_cast<std::size_t>(r.uint(4));
    if (rank > 8) r.fail("implausible rank for " + name);
    Shape shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(r.uint(8));
    manifest.emplace_back(std::move(name), std::move(shape));
  }
  std::unordered_map<std::string, Tensor> tensors;
  for (const auto& [name, shape] : manifest) {
    const std::size_t n = numel_of(shape);
    r.need(8 * n);
    std::vector<double> data(n);
    for (auto& d : data) d = r.f64();
    tensors.emplace(name, Tensor(shape, std::move(data)));
  }
  if (!r.at_end()) r.fail("trailing bytes");

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(path.string() + ": missing tensor " + name);
    return it->second;
  };
  const Tensor meta = take("meta");
  if (meta.numel() != 7) throw Error(path.string() + ": malformed meta entry");
  ModelParams p;
  p.config.channels = static_cast<std::size_t>(meta.at(0));
  p.config.classes = static_cast<std::size_t>(meta.at(1));
  p.config.bases = static_cast<std::size_t>(meta.at(2));
  p.config.mode = meta.at(3) != 0.0 ? StyleMode::kAlways : StyleMode::kOff;
  p.lora_enabled = meta.at(4) != 0.0;
  for (std::size_t i = 0; i < p.encoder.size(); ++i) {
    p.encoder[i] = {take("enc" + std::to_string(i) + ".weight"), take("enc" + std::to_string(i) + ".bias")};
  }
  for (std::size_t i = 0; i < p.decoder.size(); ++i) {
    p.decoder[i] = {take("dec" + std::to_string(i) + ".weight"), take("dec" + std::to_string(i) + ".bias")};
  }
  p.bank = {take("bank.raw_mu"), take("bank.raw_sigma")};
  if (meta.at(5) > 0.0) {
    for (std::size_t i = 0; i < p.encoder.size(); ++i) {
      const std::string target = "enc" + std::to_string(i);
      Tensor a = take("lora." + target + ".a");
      p.adapters.push_back({target, a.dim(0), meta.at(6), a, take("lora." + target + ".b")});
    }
  }
  return p;
}

void write_report_csv(const TrainReport& report, const std::filesystem::path& path, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "epoch,l_seg,l_sty,total,iou,dice,seconds\n";
  for (const auto& e : report.epochs) {
    out << e.epoch << ',' << fmt_double(e.l_seg) << ',' << fmt_double(e.l_sty) << ','
        << fmt_double(e.total) << ',' << fmt_double(e.iou) << ',' << fmt_double(e.dice) << ','
        << (timing ? fmt_double(e.seconds) : std::string("0")) << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace t3s
