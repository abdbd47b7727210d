#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "molalign/cli/commands.hpp"
#include "molalign/io/checkpoint.hpp"
#include "molalign/io/csv.hpp"
#include "molalign/io/mdtext_store.hpp"
#include "molalign/io/run_config.hpp"
#include "molalign/util/errors.hpp"
#include "support/oracles.hpp"

using namespace molalign;

namespace {

std::string toy_csv_path() { return std::string(MOLALIGN_DATA_DIR) + "/toy30.csv"; }

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out);
  out << content;
}

nlohmann::json base_config_json(const std::string &csv_path, const std::string &out_dir) {
  nlohmann::json j;
  j["dataset"] = {{"csv", csv_path},
                  {"label_columns", nlohmann::json::array({"label"})},
                  {"name", "toy"},
                  {"description", "small labeled molecules"},
                  {"target_variable", "label"},
                  {"task_type", "classification"}};
  j["llm"] = {{"use_mock", true}};
  j["encoder"] = {{"layers", 2}, {"hidden_dim", 8}};
  j["text_encoder"] = {{"vocab_buckets", 512}, {"embed_dim", 8}, {"output_dim", 8}};
  j["projection"] = {{"joint_dim", 8}};
  j["alignment"] = {{"epochs", 4}, {"warmup_epochs", 1}, {"base_lr", 0.01},
                    {"batch_size", 16}, {"val_fraction", 0.2}};
  j["finetune"] = {{"lr_candidates", nlohmann::json::array({0.01})},
                   {"max_epochs", 3},
                   {"batch_size", 8},
                   {"patience", 3},
                   {"head_hidden", 8}};
  j["seed"] = 11;
  j["out_dir"] = out_dir;
  return j;
}

std::string checkpoint_blob(const std::string &manifest, const std::string &payload) {
  std::string blob;
  blob.append(io::kCheckpointMagic, 8);
  io::detail::put_u64(blob, manifest.size());
  blob += manifest;
  blob += payload;
  return blob;
}

} // namespace

TEST_CASE("csv parsing handles quoting, line endings, and embedded breaks", "[io]") {
  auto rows = io::parse_csv("a,b,c\n1,2,3\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(rows[1] == std::vector<std::string>{"1", "2", "3"});

  rows = io::parse_csv("name,note\n\"Smith, J\",\"said \"\"hi\"\"\"\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == "Smith, J");
  CHECK(rows[1][1] == "said \"hi\"");

  rows = io::parse_csv("a,b\r\n1,2\r\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1] == std::vector<std::string>{"1", "2"});

  rows = io::parse_csv("a,b\n\"line\nbreak\",2\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == "line\nbreak");

  // final line without a trailing newline still counts
  rows = io::parse_csv("a,b\n1,2");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][1] == "2");

  CHECK(io::parse_csv("").empty());
  CHECK_THROWS_AS(io::parse_csv("a,\"unterminated\n"), ParseError);
}

TEST_CASE("ingest drops bad molecules and masks empty labels", "[io]") {
  testsupport::TempDir dir;
  std::string csv = dir.file("data.csv");
  write_file(csv, "smiles,y1,y2\n"
                  "CCO,1,0\n"
                  "XYZ(,1,1\n"   // unparseable, dropped
                  "CCN,,1\n"     // first label masked
                  "CCC,,\n"      // no labels at all, dropped
                  "c1ccccc1,0,\n");
  io::IngestReport report;
  task::MoleculeDataset ds = io::ingest_csv(csv, "smiles", {"y1", "y2"}, "toy",
                                            task::TaskType::kClassification, &report);
  CHECK(report.kept == 3);
  CHECK(report.dropped == 2);
  REQUIRE(ds.records.size() == 3);
  CHECK(ds.n_tasks == 2);
  CHECK(ds.records[0].smiles == "CCO");
  CHECK(ds.records[0].mask == std::vector<int>{1, 1});
  CHECK(ds.records[1].smiles == "CCN");
  CHECK(ds.records[1].mask == std::vector<int>{0, 1});
  CHECK(ds.records[1].labels[0] == 0.0);
  CHECK(ds.records[2].mask == std::vector<int>{1, 0});
}

TEST_CASE("ingest failures carry enough context to fix the file", "[io]") {
  testsupport::TempDir dir;
  std::string csv = dir.file("data.csv");

  write_file(csv, "smiles,y\nCCO,1\n");
  try {
    io::ingest_csv(csv, "smiles", {"label"}, "toy", task::TaskType::kClassification);
    FAIL("expected ValueError");
  } catch (const ValueError &e) {
    CHECK(std::string(e.what()).find("label") != std::string::npos);
  }

  write_file(csv, "smiles,y\nCCO,1,9\n");
  try {
    io::ingest_csv(csv, "smiles", {"y"}, "toy", task::TaskType::kClassification);
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }

  write_file(csv, "smiles,y\nCCO,2\n");
  CHECK_THROWS_AS(io::ingest_csv(csv, "smiles", {"y"}, "toy", task::TaskType::kClassification),
                  ValueError);
  // the same label is fine for regression
  CHECK_NOTHROW(io::ingest_csv(csv, "smiles", {"y"}, "toy", task::TaskType::kRegression));

  write_file(csv, "smiles,y\nCCO,abc\n");
  CHECK_THROWS_AS(io::ingest_csv(csv, "smiles", {"y"}, "toy", task::TaskType::kRegression),
                  ParseError);

  write_file(csv, "smiles,y\nBADSMI(,1\n");
  CHECK_THROWS_AS(io::ingest_csv(csv, "smiles", {"y"}, "toy", task::TaskType::kClassification),
                  ValueError); // zero usable rows

  CHECK_THROWS_AS(io::ingest_csv(dir.file("missing.csv"), "smiles", {"y"}, "toy",
                                 task::TaskType::kClassification),
                  IoError);
}

TEST_CASE("checkpoints round trip exactly through float32", "[io]") {
  testsupport::TempDir dir;
  io::Checkpoint ckpt;
  ckpt.config_digest = "digest-abc";
  nn::Tensor a;
  a.shape = {2, 2};
  a.data = {0.5, -1.25, 3.0, 0.1}; // 0.1 is not float32-exact on purpose
  nn::Tensor b;
  b.shape = {3};
  b.data = {1.0, 2.0, -7.5};
  ckpt.tensors["proj/graph"] = a;
  ckpt.tensors["gin/l0/mlp/w1"] = b;

  std::string p1 = dir.file("ckpt.bin");
  io::save_checkpoint(p1, ckpt);
  io::Checkpoint loaded = io::load_checkpoint(p1);
  CHECK(loaded.config_digest == "digest-abc");
  CHECK(loaded.format_version == io::kCheckpointVersion);
  REQUIRE(loaded.tensors.size() == 2);
  CHECK(loaded.tensors.at("proj/graph").shape == std::vector<std::size_t>{2, 2});
  CHECK(loaded.tensors.at("proj/graph").data[0] == 0.5);
  CHECK(loaded.tensors.at("proj/graph").data[1] == -1.25);
  // values pass through a float32 cast, nothing else
  CHECK(loaded.tensors.at("proj/graph").data[3] ==
        static_cast<double>(static_cast<float>(0.1)));
  CHECK(loaded.tensors.at("gin/l0/mlp/w1").data == std::vector<double>{1.0, 2.0, -7.5});

  // a second save of the loaded checkpoint is byte for byte identical
  std::string p2 = dir.file("ckpt2.bin");
  io::save_checkpoint(p2, loaded);
  CHECK(read_file(p1) == read_file(p2));

  nn::Tensor huge;
  huge.shape = {1};
  huge.data = {1e300}; // overflows float32
  io::Checkpoint bad;
  bad.tensors["x"] = huge;
  CHECK_THROWS_AS(io::save_checkpoint(dir.file("bad.bin"), bad), NumericError);
}

TEST_CASE("corrupt checkpoints are rejected before any tensor loads", "[io]") {
  testsupport::TempDir dir;
  io::Checkpoint ckpt;
  ckpt.config_digest = "d";
  nn::Tensor t;
  t.shape = {2};
  t.data = {1.0, 2.0};
  ckpt.tensors["w"] = t;
  std::string good_path = dir.file("good.bin");
  io::save_checkpoint(good_path, ckpt);
  std::string good = read_file(good_path);

  std::string path = dir.file("bad.bin");

  write_file(path, good.substr(0, 10));
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError); // truncated header

  write_file(path, good.substr(0, 30));
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError); // truncated manifest

  write_file(path, good.substr(0, good.size() - 2));
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError); // truncated payload

  std::string wrong_magic = good;
  wrong_magic[0] = 'X';
  write_file(path, wrong_magic);
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError);

  CHECK_THROWS_AS(io::load_checkpoint(dir.file("never_written.bin")), IoError);

  auto payload_of = [](std::initializer_list<float> values) {
    std::string payload;
    for (float f : values)
      io::detail::put_f32(payload, f);
    return payload;
  };

  // future format version
  write_file(path, checkpoint_blob(
                       R"({"format_version":2,"config_digest":"","tensors":[]})", ""));
  try {
    io::load_checkpoint(path);
    FAIL("expected IoError");
  } catch (const IoError &e) {
    CHECK(std::string(e.what()).find("version 2") != std::string::npos);
  }

  // overlapping spans
  write_file(path,
             checkpoint_blob(R"({"format_version":1,"config_digest":"","tensors":[)"
                             R"({"name":"a","shape":[1],"offset":0,"bytes":4},)"
                             R"({"name":"b","shape":[1],"offset":0,"bytes":4}]})",
                             payload_of({1.0f, 2.0f})));
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError);

  // gap between spans
  write_file(path,
             checkpoint_blob(R"({"format_version":1,"config_digest":"","tensors":[)"
                             R"({"name":"a","shape":[1],"offset":0,"bytes":4},)"
                             R"({"name":"b","shape":[1],"offset":8,"bytes":4}]})",
                             payload_of({1.0f, 2.0f, 3.0f})));
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError);

  // duplicate tensor names with valid tiling
  write_file(path,
             checkpoint_blob(R"({"format_version":1,"config_digest":"","tensors":[)"
                             R"({"name":"a","shape":[1],"offset":0,"bytes":4},)"
                             R"({"name":"a","shape":[1],"offset":4,"bytes":4}]})",
                             payload_of({1.0f, 2.0f})));
  try {
    io::load_checkpoint(path);
    FAIL("expected IoError");
  } catch (const IoError &e) {
    CHECK(std::string(e.what()).find("twice") != std::string::npos);
  }

  // byte count disagreeing with the shape
  write_file(path,
             checkpoint_blob(R"({"format_version":1,"config_digest":"","tensors":[)"
                             R"({"name":"a","shape":[2],"offset":0,"bytes":4}]})",
                             payload_of({1.0f})));
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError);

  // payload larger than the manifest covers
  write_file(path,
             checkpoint_blob(R"({"format_version":1,"config_digest":"","tensors":[)"
                             R"({"name":"a","shape":[1],"offset":0,"bytes":4}]})",
                             payload_of({1.0f, 2.0f})));
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError);

  // non-finite payload value
  write_file(path,
             checkpoint_blob(R"({"format_version":1,"config_digest":"","tensors":[)"
                             R"({"name":"a","shape":[1],"offset":0,"bytes":4}]})",
                             payload_of({std::numeric_limits<float>::quiet_NaN()})));
  CHECK_THROWS_AS(io::load_checkpoint(path), NumericError);

  // manifest that is not json
  write_file(path, checkpoint_blob("{not json", ""));
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError);
}

TEST_CASE("run configs parse with defaults and reject unknown keys", "[io]") {
  testsupport::TempDir dir;
  nlohmann::json j = base_config_json(toy_csv_path(), dir.str());
  io::RunConfig cfg = io::parse_run_config(j, "test");
  CHECK(cfg.dataset_csv == toy_csv_path());
  CHECK(cfg.smiles_column == "smiles"); // default
  CHECK(cfg.label_columns == std::vector<std::string>{"label"});
  CHECK(cfg.card.name == "toy");
  CHECK(cfg.card.task_type == task::TaskType::kClassification);
  CHECK(cfg.eval_seeds == 3); // default
  CHECK(cfg.seed == 11);
  CHECK(cfg.align.seed == 11);    // one seed drives every stage
  CHECK(cfg.finetune.seed == 11);
  CHECK(cfg.model.gin.hidden_dim == 8);
  CHECK(cfg.align.epochs == 4);
  CHECK(cfg.finetune.lr_candidates == std::vector<double>{0.01});
  CHECK(cfg.llm.use_mock);

  nlohmann::json bad = j;
  bad["datasets"] = nlohmann::json::object();
  try {
    io::parse_run_config(bad, "test");
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).find("datasets") != std::string::npos);
  }

  bad = j;
  bad["finetune"]["lr"] = 0.1;
  try {
    io::parse_run_config(bad, "test");
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).find("'lr'") != std::string::npos);
  }

  bad = j;
  bad["dataset"]["task_type"] = "ranking";
  CHECK_THROWS_AS(io::parse_run_config(bad, "test"), Error);

  bad = j;
  bad["dataset"].erase("description");
  CHECK_THROWS_AS(io::parse_run_config(bad, "test"), ConfigError);

  bad = j;
  bad["dataset"].erase("csv");
  CHECK_THROWS_AS(io::parse_run_config(bad, "test"), ConfigError);

  bad = j;
  bad["alignment"]["val_fraction"] = 1.5;
  CHECK_THROWS_AS(io::parse_run_config(bad, "test"), ConfigError);

  bad = j;
  bad["finetune"]["lr_candidates"] = nlohmann::json::array({-0.5});
  CHECK_THROWS_AS(io::parse_run_config(bad, "test"), ConfigError);

  bad = j;
  bad["eval_seeds"] = 0;
  CHECK_THROWS_AS(io::parse_run_config(bad, "test"), ConfigError);

  bad = j;
  bad["alignment"]["decay"] = "linear";
  CHECK_THROWS_AS(io::parse_run_config(bad, "test"), ConfigError);
  CHECK(io::decay_from_name("cosine") == nn::LrDecay::kCosine);
  CHECK(io::decay_from_name("constant") == nn::LrDecay::kConstant);
}

TEST_CASE("run config files are validated on load", "[io]") {
  testsupport::TempDir dir;
  std::string path = dir.file("config.json");

  write_file(path, base_config_json(toy_csv_path(), dir.str()).dump());
  io::RunConfig cfg = io::load_run_config(path);
  CHECK(cfg.card.name == "toy");

  nlohmann::json missing = base_config_json(dir.file("nowhere.csv"), dir.str());
  write_file(path, missing.dump());
  CHECK_THROWS_AS(io::load_run_config(path), ConfigError);

  write_file(path, "{broken json");
  CHECK_THROWS_AS(io::load_run_config(path), ConfigError);

  CHECK_THROWS_AS(io::load_run_config(dir.file("absent.json")), IoError);
}

TEST_CASE("model digests change with the architecture", "[io]") {
  align::ModelConfigs a;
  align::ModelConfigs b = a;
  CHECK(io::model_config_digest(a) == io::model_config_digest(b));
  b.gin.hidden_dim += 1;
  CHECK(io::model_config_digest(a) != io::model_config_digest(b));
  b = a;
  b.proj.joint_dim += 1;
  CHECK(io::model_config_digest(a) != io::model_config_digest(b));
  CHECK(io::model_config_digest(a).size() == 64);
}

TEST_CASE("the md-text store round trips and validates", "[io]") {
  testsupport::TempDir dir;
  std::string path = io::mdtext_store_path(dir.str(), "My Data/Set");
  CHECK(path == dir.str() + "/mdtext/My_Data_Set.jsonl");

  CHECK(io::load_mdtext_store(path).empty()); // missing file reads as empty

  prompting::MDText t1;
  t1.smiles = "CCO";
  t1.body = "ethanol has a hydroxyl\nand two carbons\n";
  t1.template_hash = "abc123";
  t1.source = llm::Source::kMock;
  prompting::MDText t2;
  t2.smiles = "c1ccccc1";
  t2.body = "benzene is aromatic";
  t2.template_hash = "abc123";
  t2.source = llm::Source::kCache;
  io::append_mdtext(path, t1);
  io::append_mdtext(path, t2);

  std::vector<prompting::MDText> loaded = io::load_mdtext_store(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].smiles == "CCO");
  CHECK(loaded[0].body == t1.body);
  CHECK(loaded[0].template_hash == "abc123");
  CHECK(loaded[0].source == llm::Source::kMock);
  CHECK(loaded[1].source == llm::Source::kCache);

  {
    std::ofstream out(path, std::ios::app);
    out << "corrupt line\n";
  }
  try {
    io::load_mdtext_store(path);
    FAIL("expected IoError");
  } catch (const IoError &e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  std::string other = dir.file("other.jsonl");
  write_file(other, R"({"smiles":"CCO","body":"x","template_hash":"h"})" "\n");
  CHECK_THROWS_AS(io::load_mdtext_store(other), IoError); // missing source field
  write_file(other,
             R"({"smiles":"CCO","body":"","template_hash":"h","source":"mock"})" "\n");
  CHECK_THROWS_AS(io::load_mdtext_store(other), IoError); // empty body
  write_file(other,
             R"({"smiles":"CCO","body":"x","template_hash":"h","source":"oracle"})" "\n");
  CHECK_THROWS_AS(io::load_mdtext_store(other), IoError); // unknown source
}

TEST_CASE("flag overrides rewrite the seed everywhere it is used", "[cli]") {
  testsupport::TempDir dir;
  io::RunConfig cfg = io::parse_run_config(base_config_json(toy_csv_path(), dir.str()), "test");
  cfg.llm.use_mock = false;
  cli::apply_overrides(cfg, std::uint64_t{77}, true, std::string("elsewhere"));
  CHECK(cfg.seed == 77);
  CHECK(cfg.align.seed == 77);
  CHECK(cfg.finetune.seed == 77);
  CHECK(cfg.llm.use_mock);
  CHECK(cfg.out_dir == "elsewhere");

  io::RunConfig cfg2 = io::parse_run_config(base_config_json(toy_csv_path(), dir.str()), "test");
  cli::apply_overrides(cfg2, std::nullopt, false, std::nullopt);
  CHECK(cfg2.seed == 11);
  CHECK(cfg2.out_dir == dir.str());
}

TEST_CASE("the calibrate command reports every registry metric", "[cli]") {
  dsm::DescriptorReport report = cli::cmd_calibrate("CCO");
  REQUIRE(report.values.size() == dsm::all_metric_ids().size());
  dsm::DescriptorReport direct =
      dsm::compute_report(chem::parse_smiles("CCO"), dsm::all_metric_ids());
  for (std::size_t i = 0; i < report.values.size(); ++i) {
    CHECK(report.values[i].id == direct.values[i].id);
    CHECK(report.values[i].value == direct.values[i].value);
  }
  CHECK_THROWS_AS(cli::cmd_calibrate("C1CC"), ParseError);
}

TEST_CASE("the split command writes deterministic grouped indices", "[cli]") {
  testsupport::TempDir dir1, dir2;
  io::RunConfig cfg1 = io::parse_run_config(base_config_json(toy_csv_path(), dir1.str()), "test");
  io::RunConfig cfg2 = io::parse_run_config(base_config_json(toy_csv_path(), dir2.str()), "test");
  std::string p1 = cli::cmd_split(cfg1);
  std::string p2 = cli::cmd_split(cfg2);
  CHECK(read_file(p1) == read_file(p2));

  nlohmann::json doc = nlohmann::json::parse(read_file(p1));
  std::vector<std::size_t> all;
  for (const char *part : {"train", "valid", "test"})
    for (const nlohmann::json &idx : doc[part])
      all.push_back(idx.get<std::size_t>());
  std::sort(all.begin(), all.end());
  REQUIRE(all.size() == 30);
  for (std::size_t i = 0; i < all.size(); ++i)
    CHECK(all[i] == i);
  CHECK_FALSE(doc["test"].empty());
}

TEST_CASE("describe writes each molecule once and is idempotent", "[cli]") {
  testsupport::TempDir dir;
  io::RunConfig cfg = io::parse_run_config(base_config_json(toy_csv_path(), dir.str()), "test");

  cli::DescribeSummary first = cli::cmd_describe(cfg);
  CHECK(first.written == 30);
  CHECK(first.skipped == 0);
  CHECK(first.ingest.kept == 30);
  CHECK(first.ingest.dropped == 0);
  // one template request plus one description per molecule
  CHECK(first.backend_calls == 31);

  std::vector<prompting::MDText> store = io::load_mdtext_store(first.store_path);
  REQUIRE(store.size() == 30);
  for (const prompting::MDText &text : store) {
    CHECK_FALSE(text.body.empty());
    CHECK(text.template_hash == store[0].template_hash);
  }

  // a second run finds everything cached and calls no backend
  cli::DescribeSummary second = cli::cmd_describe(cfg);
  CHECK(second.written == 0);
  CHECK(second.skipped == 30);
  CHECK(second.backend_calls == 0);
  CHECK(read_file(first.store_path) == read_file(second.store_path));
}

TEST_CASE("describe refuses a store built from a different template", "[cli]") {
  testsupport::TempDir dir;
  io::RunConfig cfg = io::parse_run_config(base_config_json(toy_csv_path(), dir.str()), "test");
  cli::DescribeSummary summary = cli::cmd_describe(cfg);

  std::vector<prompting::MDText> store = io::load_mdtext_store(summary.store_path);
  store[0].template_hash = "0000000000000000";
  std::filesystem::remove(summary.store_path);
  for (const prompting::MDText &text : store)
    io::append_mdtext(summary.store_path, text);

  try {
    cli::cmd_describe(cfg);
    FAIL("expected ValueError");
  } catch (const ValueError &e) {
    CHECK(std::string(e.what()).find("different template") != std::string::npos);
  }
}

TEST_CASE("pretrain demands a complete description store", "[cli]") {
  testsupport::TempDir dir;
  io::RunConfig cfg = io::parse_run_config(base_config_json(toy_csv_path(), dir.str()), "test");
  try {
    cli::cmd_pretrain(cfg);
    FAIL("expected ValueError");
  } catch (const ValueError &e) {
    std::string msg = e.what();
    CHECK(msg.find("run describe first") != std::string::npos);
    CHECK(msg.find("CCO") != std::string::npos);
  }

  // a store mixing template generations is also rejected
  cli::DescribeSummary described = cli::cmd_describe(cfg);
  std::vector<prompting::MDText> store = io::load_mdtext_store(described.store_path);
  store[5].template_hash = "1111111111111111";
  std::filesystem::remove(described.store_path);
  for (const prompting::MDText &text : store)
    io::append_mdtext(described.store_path, text);
  try {
    cli::cmd_pretrain(cfg);
    FAIL("expected ValueError");
  } catch (const ValueError &e) {
    CHECK(std::string(e.what()).find("mixes entries") != std::string::npos);
  }
}

TEST_CASE("the full pipeline runs end to end on the toy dataset", "[cli][pipeline]") {
  testsupport::TempDir dir;
  io::RunConfig cfg = io::parse_run_config(base_config_json(toy_csv_path(), dir.str()), "test");

  cli::cmd_describe(cfg);
  cli::PretrainSummary pre = cli::cmd_pretrain(cfg);
  CHECK(pre.pairs == 30);
  CHECK(pre.best_epoch >= 0);
  CHECK(pre.best_epoch < cfg.align.epochs);
  CHECK(std::filesystem::exists(pre.checkpoint_path));

  std::vector<std::string> history_lines;
  {
    std::istringstream in(read_file(pre.history_path));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty())
        history_lines.push_back(line);
  }
  REQUIRE(history_lines.size() == static_cast<std::size_t>(cfg.align.epochs) + 1);
  CHECK(history_lines[0] == "epoch,lr,train_loss,val_loss,val_g2t,val_t2g");

  io::Checkpoint ckpt = io::load_checkpoint(pre.checkpoint_path);
  CHECK(ckpt.config_digest == io::model_config_digest(cfg.model));
  CHECK(ckpt.tensors.count("gin/node_emb/atomic") == 1);
  CHECK(ckpt.tensors.count("proj/text") == 1);

  cli::FinetuneSummary fine = cli::cmd_finetune(cfg);
  CHECK(fine.metric == task::MetricKind::kAuc);
  CHECK(fine.chosen_lr == 0.01);
  CHECK(fine.test_average >= 0.0);
  CHECK(fine.test_average <= 1.0);
  REQUIRE_FALSE(fine.rows.empty());
  CHECK(fine.rows.back().task == "average");

  std::string metrics = read_file(fine.metrics_path);
  CHECK(metrics.rfind("dataset,task,metric,value,seed\n", 0) == 0);
  CHECK(metrics.find(",roc_auc,") != std::string::npos);
  CHECK(metrics.find("toy,average,roc_auc,") != std::string::npos);

  io::Checkpoint tuned = io::load_checkpoint(fine.model_path);
  CHECK(tuned.config_digest == ckpt.config_digest);
  CHECK(tuned.tensors.count("head/w1") == 1);

  io::RunConfig eval_cfg = cfg;
  eval_cfg.eval_seeds = 2;
  cli::EvalSummary eval = cli::cmd_eval(eval_cfg);
  CHECK(eval.seeds == 2);
  CHECK(std::isfinite(eval.averages.mean));
  CHECK(eval.averages.stddev >= 0.0);
  // per seed: one labeled task plus the average row
  CHECK(eval.rows.size() == 4);
  CHECK(read_file(eval.metrics_path).find(",roc_auc,") != std::string::npos);

  // a config with a different architecture refuses the checkpoint
  io::RunConfig other = cfg;
  other.model.gin.hidden_dim = 16;
  try {
    cli::cmd_finetune(other);
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    std::string msg = e.what();
    CHECK(msg.find(ckpt.config_digest.substr(0, 12)) != std::string::npos);
    CHECK(msg.find(io::model_config_digest(other.model).substr(0, 12)) != std::string::npos);
  }
}

TEST_CASE("a dataset named qm7 is scored with mean absolute error", "[cli]") {
  testsupport::TempDir dir;
  std::string csv = dir.file("qm7_tiny.csv");
  write_file(csv, "smiles,y\n"
                  "c1ccccc1,1.5\n"
                  "c1ccncc1,2.5\n"
                  "c1ccoc1,0.5\n"
                  "c1ccsc1,3.5\n"
                  "C1CCCCC1,1.0\n"
                  "C1CCNCC1,2.0\n"
                  "C1CCOC1,0.8\n"
                  "c1cc[nH]c1,1.2\n"
                  "c1ccc2ccccc2c1,4.0\n"
                  "C1CCCC1,0.9\n");

  nlohmann::json j = base_config_json(csv, dir.str());
  j["dataset"]["name"] = "QM7";
  j["dataset"]["task_type"] = "regression";
  j["dataset"]["label_columns"] = nlohmann::json::array({"y"});
  j["dataset"]["target_variable"] = "atomization energy";
  j["alignment"]["epochs"] = 2;
  j["finetune"]["max_epochs"] = 2;
  io::RunConfig cfg = io::parse_run_config(j, "test");

  cli::cmd_describe(cfg);
  cli::cmd_pretrain(cfg);
  cli::FinetuneSummary fine = cli::cmd_finetune(cfg);
  CHECK(fine.metric == task::MetricKind::kMae);
  CHECK(std::isfinite(fine.test_average));
  CHECK(read_file(fine.metrics_path).find(",mae,") != std::string::npos);
}
