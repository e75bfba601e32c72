#include "fmbeam/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fmbeam/checkpoint.hpp"
#include "fmbeam/errors.hpp"
#include "fmbeam/json_util.hpp"

namespace fmbeam {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("training.epochs must be >= 1");
  if (!(adam.base_lr > 0)) throw ConfigError("training.lr must be positive");
  if (!(adam.decay_factor > 0 && adam.decay_factor <= 1)) {
    throw ConfigError("training.decay_factor must be in (0, 1]");
  }
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"batch_size", cfg.batch_size},     {"epochs", cfg.epochs},
          {"lr", cfg.adam.base_lr},           {"beta1", cfg.adam.beta1},
          {"beta2", cfg.adam.beta2},          {"eps", cfg.adam.eps},
          {"decay_factor", cfg.adam.decay_factor}, {"decay_every", cfg.adam.decay_every},
          {"seed", cfg.seed},                 {"checkpoint_every", cfg.checkpoint_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  StrictObject o(j, "training");
  o.read("batch_size", cfg.batch_size)
      .read("epochs", cfg.epochs)
      .read("lr", cfg.adam.base_lr)
      .read("beta1", cfg.adam.beta1)
      .read("beta2", cfg.adam.beta2)
      .read("eps", cfg.adam.eps)
      .read("decay_factor", cfg.adam.decay_factor)
      .read("decay_every", cfg.adam.decay_every)
      .read("seed", cfg.seed)
      .read("checkpoint_every", cfg.checkpoint_every);
  o.finish();
  cfg.validate();
  return cfg;
}

Trainer::Trainer(Predictor& model, TrainConfig cfg)
    : model_(model), cfg_(cfg), adam_(model.params(), cfg.adam) {
  cfg_.validate();
}

LossBreakdown Trainer::train_epoch(std::span<const WindowSample> train, std::size_t epoch) {
  if (train.empty()) throw DataError("training split is empty");
  Rng rng = Rng(cfg_.seed).fork(epoch);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  LossBreakdown acc;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
    const Batch batch =
        make_batch(train, std::span<const std::size_t>(order).subspan(start, end - start));
    Tape tape(&model_.params());
    LossTerms terms = model_.loss(tape, batch, rng);
    tape.backward(terms.objective);
    const auto grads = tape.param_grads();
    for (const auto& g : grads) {
      if (!g.all_finite()) {
        throw NumericError("non-finite gradient in epoch " + std::to_string(epoch + 1));
      }
    }
    adam_.step(model_.params(), grads, epoch);
    if (!model_.params().all_finite()) {
      throw NumericError("non-finite parameter after update in epoch " + std::to_string(epoch + 1));
    }
    const double w = static_cast<double>(batch.size);
    acc.fm += w * terms.values.fm;
    acc.term += w * terms.values.term;
    acc.ce += w * terms.values.ce;
  }
  const double n = static_cast<double>(train.size());
  acc.fm /= n;
  acc.term /= n;
  acc.ce /= n;
  acc.total = acc.fm + acc.term + acc.ce;
  return acc;
}

const std::vector<EpochRecord>& Trainer::fit(std::span<const WindowSample> train,
                                             const std::filesystem::path& out_dir,
                                             std::size_t until, const EpochCallback& on_epoch) {
  if (train.empty()) throw DataError("training split is empty");
  const std::size_t last = until == 0 ? cfg_.epochs : std::min(until, cfg_.epochs);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  for (std::size_t e = history_.size(); e < last; ++e) {
    EpochRecord rec{e + 1, train_epoch(train, e)};
    history_.push_back(rec);
    if (!out_dir.empty()) {
      write_losses_csv(out_dir / "losses.csv", history_);
      if (cfg_.checkpoint_every != 0 && rec.epoch % cfg_.checkpoint_every == 0) {
        char name[64];
        std::snprintf(name, sizeof name, "checkpoint_e%04zu.ckpt", rec.epoch);
        save(out_dir / name);
      }
    }
    if (on_epoch) on_epoch(rec);
  }
  if (!out_dir.empty()) save(out_dir / "model.ckpt");
  return history_;
}

void Trainer::save(const std::filesystem::path& path) const {
  nlohmann::json losses = nlohmann::json::array();
  for (const auto& r : history_) {
    losses.push_back({r.loss.fm, r.loss.term, r.loss.ce});
  }
  Checkpoint ckpt;
  ckpt.config_json = nlohmann::json{{"predictor", model_.config_json()},
                                    {"training", to_json(cfg_)},
                                    {"epochs_done", history_.size()},
                                    {"adam_steps", adam_.steps()},
                                    {"losses", losses}}
                         .dump();
  store_params(ckpt, model_.params());
  const auto& ps = model_.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ckpt.tensors.emplace_back("adam.m/" + ps[i].name, adam_.first_moments()[i]);
    ckpt.tensors.emplace_back("adam.v/" + ps[i].name, adam_.second_moments()[i]);
  }
  save_checkpoint(path, ckpt);
}

void Trainer::resume(const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  const auto cfg = nlohmann::json::parse(ckpt.config_json, nullptr, false);
  if (cfg.is_discarded() || !cfg.contains("training") || !cfg.contains("losses")) {
    throw DataError(path.string() + ": not a training checkpoint");
  }
  if (cfg["predictor"] != model_.config_json()) {
    throw ConfigError(path.string() + ": checkpoint was written for a different model config");
  }
  if (cfg["training"] != to_json(cfg_)) {
    throw ConfigError(path.string() + ": checkpoint was written with a different training config");
  }
  restore_params(ckpt, model_.params());
  const auto& ps = model_.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Tensor* m = ckpt.find("adam.m/" + ps[i].name);
    const Tensor* v = ckpt.find("adam.v/" + ps[i].name);
    if (m == nullptr || v == nullptr) {
      throw DataError(path.string() + ": missing optimizer state for " + ps[i].name);
    }
    adam_.first_moments()[i] = *m;
    adam_.second_moments()[i] = *v;
  }
  adam_.set_steps(cfg["adam_steps"].get<std::uint64_t>());
  history_.clear();
  for (const auto& l : cfg["losses"]) {
    EpochRecord r;
    r.epoch = history_.size() + 1;
    r.loss.fm = l[0].get<double>();
    r.loss.term = l[1].get<double>();
    r.loss.ce = l[2].get<double>();
    r.loss.total = r.loss.fm + r.loss.term + r.loss.ce;
    history_.push_back(r);
  }
}

void write_losses_csv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,L_FM,L_Term,L_CE,L_total\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.loss.fm,
                  r.loss.term, r.loss.ce, r.loss.total);
    out << line;
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<EpochRecord> read_losses_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,L_FM,L_Term,L_CE,L_total") {
    throw DataError(path.string() + ":1: unexpected losses header");
  }
  std::vector<EpochRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    EpochRecord r;
    char comma;
    std::istringstream ss(line);
    if (!(ss >> r.epoch >> comma >> r.loss.fm >> comma >> r.loss.term >> comma >> r.loss.ce >>
          comma >> r.loss.total)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed losses row");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace fmbeam
