#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "thcrl/trainer.hpp"

using namespace thcrl;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.batch_size = 16;
  cfg.pretrain_epochs = 10;
  cfg.finetune_epochs = 8;
  cfg.d_psi = 8;
  cfg.d_phi = 4;
  cfg.depth_u = 2;
  cfg.c0 = 2;
  cfg.knn_k = 5;
  cfg.ae_hidden = {8};
  cfg.dropout = 0.1;
  cfg.metrics_every = 4;
  cfg.kmeans_restarts = 4;
  cfg.seed = 5;
  return cfg;
}

MultiViewDataset tiny_dataset(uint64_t seed = 3) {
  return min_max_normalize(make_synthetic(48, 3, {3, 4}, {0.12, 0.12}, seed));
}

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("thcrl_trainer_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("pretraining reduces the reconstruction loss") {
  TrainerT<double> trainer(tiny_dataset(), tiny_config());
  trainer.pretrain();
  const auto& rows = trainer.log().rows;
  REQUIRE(rows.size() == 10);
  CHECK(rows.back().loss_rec < rows.front().loss_rec);
  for (const auto& r : rows) {
    CHECK(r.phase == "pretrain");
    CHECK(!r.has_akc);
  }
}

TEST_CASE("zero pretrain epochs still yields a checkpoint finetune accepts") {
  auto dir = temp_dir("tp0");
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 0;
  cfg.finetune_epochs = 2;
  TrainerT<double> trainer(tiny_dataset(), cfg);
  trainer.pretrain();
  trainer.save((dir / "ckpt").string());

  TrainerT<double> resumed(tiny_dataset(), cfg, (dir / "ckpt").string());
  resumed.finetune();
  CHECK(resumed.log().rows.size() == 2);
}

TEST_CASE("same seed gives bit-identical checkpoints") {
  auto dir = temp_dir("determinism");
  for (int run = 0; run < 2; ++run) {
    auto cfg = tiny_config();
    cfg.pretrain_epochs = 4;
    TrainerT<double> trainer(tiny_dataset(), cfg);
    trainer.pretrain();
    trainer.save((dir / ("ckpt" + std::to_string(run))).string());
  }
  CHECK(read_file(dir / "ckpt0.bin") == read_file(dir / "ckpt1.bin"));
  CHECK(read_file(dir / "ckpt0.json") == read_file(dir / "ckpt1.json"));
}

TEST_CASE("full run loss columns are deterministic per seed") {
  RunLog logs[2];
  for (int run = 0; run < 2; ++run) {
    auto cfg = tiny_config();
    cfg.pretrain_epochs = 3;
    cfg.finetune_epochs = 3;
    TrainerT<double> trainer(tiny_dataset(), cfg);
    trainer.pretrain();
    trainer.finetune();
    logs[run] = trainer.log();
  }
  REQUIRE(logs[0].rows.size() == logs[1].rows.size());
  for (size_t i = 0; i < logs[0].rows.size(); ++i) {
    CHECK(logs[0].rows[i].loss_rec == logs[1].rows[i].loss_rec);
    CHECK(logs[0].rows[i].loss_akc == logs[1].rows[i].loss_akc);
    CHECK(logs[0].rows[i].loss_total == logs[1].rows[i].loss_total);
  }
}

TEST_CASE("lambda = 0 reproduces the w/o AKCL ablation path") {
  auto cfg_a = tiny_config();
  cfg_a.lambda = 0.0;
  auto cfg_b = tiny_config();
  cfg_b.no_akcl = true;
  RunLog logs[2];
  int i = 0;
  for (const auto& cfg : {cfg_a, cfg_b}) {
    TrainerT<double> trainer(tiny_dataset(), cfg);
    trainer.pretrain();
    trainer.finetune();
    logs[i++] = trainer.log();
  }
  REQUIRE(logs[0].rows.size() == logs[1].rows.size());
  for (size_t r = 0; r < logs[0].rows.size(); ++r) {
    CHECK(logs[0].rows[r].loss_rec == logs[1].rows[r].loss_rec);
    CHECK(logs[0].rows[r].loss_total == logs[1].rows[r].loss_total);
  }
}

TEST_CASE("no_dshf swaps fusion for plain concatenation") {
  auto cfg = tiny_config();
  cfg.no_dshf = true;
  cfg.pretrain_epochs = 2;
  cfg.finetune_epochs = 2;
  TrainerT<double> trainer(tiny_dataset(), cfg);
  trainer.pretrain();
  trainer.finetune();
  auto ev = trainer.evaluate();
  CHECK(ev.embeddings.rows == 48);
  CHECK(ev.embeddings.cols == 4);
  CHECK(ev.has_metrics);
}

TEST_CASE("checkpoint round trip: save, load, evaluate identically") {
  auto dir = temp_dir("roundtrip");
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 3;
  cfg.finetune_epochs = 3;
  TrainerT<double> trainer(tiny_dataset(), cfg);
  trainer.pretrain();
  trainer.finetune();
  auto before = trainer.evaluate();
  trainer.save((dir / "ckpt").string());

  TrainerT<double> loaded(tiny_dataset(), cfg, (dir / "ckpt").string());
  auto after = loaded.evaluate();
  CHECK(before.embeddings.a == after.embeddings.a);
  CHECK(before.report.acc == after.report.acc);
  CHECK(before.report.nmi == after.report.nmi);
  CHECK(before.report.pur == after.report.pur);

  auto again = loaded.evaluate();
  CHECK(after.report.acc == again.report.acc);
  CHECK(after.clusters.assignments == again.clusters.assignments);
}

TEST_CASE("evaluate without labels exports embeddings only") {
  auto ds = tiny_dataset();
  ds.labels.reset();
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 1;
  cfg.finetune_epochs = 0;
  TrainerT<double> trainer(ds, cfg);
  trainer.pretrain();
  auto ev = trainer.evaluate();
  CHECK(!ev.has_metrics);
  CHECK(ev.embeddings.rows == 48);
}

TEST_CASE("runlog csv format") {
  auto dir = temp_dir("csv");
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 2;
  cfg.finetune_epochs = 4;
  cfg.metrics_every = 2;
  TrainerT<double> trainer(tiny_dataset(), cfg);
  trainer.pretrain();
  trainer.finetune();
  trainer.log().write_csv((dir / "runlog.csv").string());

  std::ifstream in(dir / "runlog.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,phase,loss_rec,loss_akc,loss_total,acc,nmi,pur,wall_ms");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 6);
}

TEST_CASE("metrics appear on the configured cadence") {
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 0;
  cfg.finetune_epochs = 5;
  cfg.metrics_every = 2;
  TrainerT<double> trainer(tiny_dataset(), cfg);
  trainer.pretrain();
  trainer.finetune();
  const auto& rows = trainer.log().rows;
  REQUIRE(rows.size() == 5);
  CHECK(!rows[0].has_metrics);
  CHECK(rows[1].has_metrics);
  CHECK(!rows[2].has_metrics);
  CHECK(rows[3].has_metrics);
  CHECK(rows[4].has_metrics);  // final epoch always evaluated
}

TEST_CASE("divergence aborts with a diagnostic epoch") {
  auto cfg = tiny_config();
  cfg.lr = 1e80;
  cfg.pretrain_epochs = 50;
  TrainerT<double> trainer(tiny_dataset(), cfg);
  CHECK_THROWS_WITH_AS(trainer.pretrain(), doctest::Contains("epoch"), Error);
}

TEST_CASE("graph refresh epochs run cleanly") {
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 2;
  cfg.finetune_epochs = 5;
  cfg.graph_refresh_epochs = 2;
  TrainerT<double> trainer(tiny_dataset(), cfg);
  trainer.pretrain();
  trainer.finetune();
  CHECK(trainer.log().rows.size() == 7);
  CHECK(trainer.graph().n == 48);
}

TEST_CASE("full denominator scope equals batch scope when one batch covers the dataset") {
  auto base = tiny_config();
  base.batch_size = 64;  // > N = 48, a single batch
  base.pretrain_epochs = 2;
  base.finetune_epochs = 2;
  base.dropout = 0.0;
  RunLog logs[2];
  int i = 0;
  for (auto scope : {DenominatorScope::kBatch, DenominatorScope::kFull}) {
    auto cfg = base;
    cfg.denominator_scope = scope;
    TrainerT<double> trainer(tiny_dataset(), cfg);
    trainer.pretrain();
    trainer.finetune();
    logs[i++] = trainer.log();
  }
  for (size_t r = 0; r < logs[0].rows.size(); ++r) {
    CHECK(logs[0].rows[r].loss_rec ==
          doctest::Approx(logs[1].rows[r].loss_rec).epsilon(1e-9));
    CHECK(logs[0].rows[r].loss_akc ==
          doctest::Approx(logs[1].rows[r].loss_akc).epsilon(1e-9));
  }
}

TEST_CASE("sweep emits one row per grid point") {
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 1;
  cfg.finetune_epochs = 1;
  auto ds = tiny_dataset();

  auto single = sweep<double>(ds, cfg, {1.0}, {0.5});
  REQUIRE(single.size() == 1);

  // a 1x1 grid reproduces the plain run
  TrainerT<double> trainer(ds, cfg);
  trainer.pretrain();
  trainer.finetune();
  auto ev = trainer.evaluate();
  CHECK(single[0].report.acc == ev.report.acc);

  auto two = sweep<double>(ds, cfg, {0.1, 1.0}, {0.5});
  CHECK(two.size() == 2);
  CHECK_THROWS_AS(sweep<double>(ds, cfg, {}, {0.5}), ConfigError);
}

TEST_CASE("config json round trip and validation") {
  auto dir = temp_dir("config");
  RunConfig cfg = tiny_config();
  cfg.no_dshf = true;
  cfg.denominator_scope = DenominatorScope::kFull;
  cfg.nmi_norm = NmiNorm::kArithmetic;
  save_config(cfg, (dir / "cfg.json").string());
  auto loaded = load_config((dir / "cfg.json").string());
  CHECK(loaded.batch_size == cfg.batch_size);
  CHECK(loaded.d_psi == cfg.d_psi);
  CHECK(loaded.ae_hidden == cfg.ae_hidden);
  CHECK(loaded.no_dshf == cfg.no_dshf);
  CHECK(loaded.denominator_scope == DenominatorScope::kFull);
  CHECK(loaded.nmi_norm == NmiNorm::kArithmetic);

  {
    std::ofstream bad(dir / "bad.json");
    bad << "{\"batch_sizee\": 4}";
  }
  CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
  {
    std::ofstream bad(dir / "bad2.json");
    bad << "{\"tau\": -1.0}";
  }
  CHECK_THROWS_AS(load_config((dir / "bad2.json").string()), ConfigError);
}

TEST_CASE("embeddings export round trip with shape sidecar") {
  auto dir = temp_dir("emb");
  Matrix m(5, 3);
  Rng rng(3);
  for (auto& v : m.a) v = double(float(rng.uniform(-1, 1)));
  write_embeddings_f32((dir / "embeddings.f32").string(), m);
  CHECK(fs::exists(dir / "embeddings.shape"));
  auto back = read_embeddings_f32((dir / "embeddings.f32").string());
  CHECK(back.rows == 5);
  CHECK(back.cols == 3);
  CHECK(back.a == m.a);
}

TEST_CASE("float32 mode trains end to end") {
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 2;
  cfg.finetune_epochs = 2;
  TrainerT<float> trainer(tiny_dataset(), cfg);
  trainer.pretrain();
  trainer.finetune();
  auto ev = trainer.evaluate();
  CHECK(ev.has_metrics);
  CHECK(std::isfinite(trainer.log().rows.back().loss_total));
}
