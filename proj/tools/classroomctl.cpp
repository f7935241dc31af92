// classroomctl: operate the classroom engine from the command line.

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "classroom/classroom.hpp"

namespace fs = std::filesystem;
using namespace classroom;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::string db_path = "classroom.db";
  std::string model_path = "model.ckpt";
  std::string listen_addr = "127.0.0.1:8080";
  TimestampMs capture_interval_ms = 2000;
};

std::pair<std::string, int> split_host_port(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "listen address must be host:port");
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

std::shared_ptr<const EmotionClassifier> load_classifier(const std::string& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::IOFailure, "no model at " + path + "; run 'classroomctl train' first");
  }
  return std::make_shared<CnnClassifier>(load_checkpoint(path));
}

api::ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int run_serve(const GlobalOptions& g, const std::string& static_dir, const std::string& enroll_file) {
  Store store(g.db_path);
  EnrollmentRegistry registry;
  SessionEngine engine(store, registry, load_classifier(g.model_path));
  if (!enroll_file.empty()) {
    std::size_t added = 0;
    for (const auto& e : read_enrollment_file(enroll_file)) {
      if (registry.contains(e.student_id)) continue;
      engine.enroll_student(e.student_id, e.display_name,
                            std::vector<double>(e.embedding.values().begin(), e.embedding.values().end()));
      ++added;
    }
    std::cerr << "enrolled " << added << " students from " << enroll_file << "\n";
  }
  IngestionGateway gateway(engine, GatewayConfig{g.capture_interval_ms, 32});
  api::ApiServer server(engine, gateway, api::ServerOptions{static_dir, g.capture_interval_ms});
  const auto [host, port] = split_host_port(g.listen_addr);
  const int bound = server.bind(host, port);
  if (bound < 0) throw Error(ErrorCode::IOFailure, "cannot listen on " + g.listen_addr);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << host << ':' << bound << " (" << registry.size() << " students enrolled)\n";
  server.serve();
  g_server = nullptr;
  return 0;
}

json summarize_log(const sim::GroundTruthLog& log) {
  std::size_t accepted = 0, rejected = 0, marked = 0, unmatched = 0;
  for (const auto& e : log.entries) {
    if (!e.ack) continue;
    if (e.ack->accepted) ++accepted; else ++rejected;
    if (e.ack->outcome == OutcomeKind::AttendanceMarked) ++marked;
    if (e.ack->outcome == OutcomeKind::UnmatchedIgnored) ++unmatched;
  }
  return json{{"ticks", log.ticks},
              {"emitted", log.emitted_count()},
              {"accepted", accepted},
              {"rejected", rejected},
              {"attendance_marked", marked},
              {"unmatched", unmatched}};
}

int run_simulate_local(const GlobalOptions& g, const sim::SimScenario& scenario, bool compressed) {
  Store store(g.db_path);
  EnrollmentRegistry registry;
  SessionEngine engine(store, registry, load_classifier(g.model_path), MatcherConfig{scenario.threshold});
  const auto students = sim::generate_students(scenario);
  for (const auto& s : students) {
    if (!registry.contains(s.student_id)) engine.enroll_student(s.student_id, s.display_name, s.embedding, 0);
  }
  IngestionGateway gateway(engine, GatewayConfig{scenario.tick_ms, 32});
  const TimestampMs start = now_ms();
  const Session session = engine.start_session(scenario.course_label, start);
  const auto log = sim::run_scenario(scenario, students, gateway, sim::RunOptions{session.session_id, start, compressed, {}});
  const TimestampMs end = start + static_cast<TimestampMs>(log.ticks) * scenario.tick_ms;
  engine.end_session(session.session_id, end);

  json report = summarize_log(log);
  report["session_id"] = session.session_id;
  report["attendance_rows"] = store.count_attendance(session.session_id);
  report["emotion_rows"] = store.count_emotions(session.session_id);
  report["summary"] = api::to_json(Analytics(engine).session_summary(session.session_id));
  std::cout << report.dump(2) << '\n';
  return 0;
}

int run_simulate_remote(const sim::SimScenario& scenario, bool compressed, const std::string& url) {
  httplib::Client client(url);
  const auto post = [&](const std::string& path, const json& body) {
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::GatewayUnavailable, url + path + ": " + httplib::to_string(res.error()));
    return res;
  };
  const auto students = sim::generate_students(scenario);
  for (const auto& s : students) {
    auto res = post("/v1/students", {{"student_id", s.student_id},
                                     {"display_name", s.display_name},
                                     {"embedding", s.embedding},
                                     {"enrolled_at", 0}});
    if (res->status == 409) {
      std::cerr << "warning: " << s.student_id << " already enrolled; keeping the server's embedding\n";
    } else if (res->status != 201) {
      throw Error(ErrorCode::InvalidArgument, "enrolling " + s.student_id + " failed: " + res->body);
    }
  }
  const TimestampMs start = now_ms();
  auto res = post("/v1/sessions", {{"course_label", scenario.course_label}, {"started_at", start}});
  if (res->status != 201) throw Error(ErrorCode::InvalidArgument, "starting session failed: " + res->body);
  const std::string session_id = json::parse(res->body).at("session_id").get<std::string>();

  api::HttpDetectionSink sink(url);
  const auto log = sim::run_scenario(scenario, students, sink, sim::RunOptions{session_id, start, compressed, {}});
  const TimestampMs end = start + static_cast<TimestampMs>(log.ticks) * scenario.tick_ms;
  post("/v1/sessions/" + session_id + "/end", {{"ended_at", end}});

  json report = summarize_log(log);
  report["session_id"] = session_id;
  if (auto summary = client.Get("/v1/sessions/" + session_id + "/summary"); summary && summary->status == 200) {
    report["summary"] = json::parse(summary->body);
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

LabeledDataset synthetic_split(std::size_t per_class, std::uint64_t seed, SplitTag split) {
  return sim::synthetic_crop_dataset(per_class, seed, split);
}

int run_train(const GlobalOptions& g, const std::string& manifest, std::size_t per_class, std::size_t test_per_class,
              AdamConfig config, std::uint64_t seed, const std::string& history_path) {
  LabeledDataset train_set, test_set;
  if (!manifest.empty()) {
    train_set = dataset::load_manifest_split(manifest, SplitTag::Train);
    test_set = dataset::load_manifest_split(manifest, SplitTag::Test);
  } else {
    train_set = synthetic_split(per_class, seed, SplitTag::Train);
    test_set = synthetic_split(test_per_class, seed + 1, SplitTag::Test);
  }
  std::cerr << "training on " << train_set.size() << " images, validating on " << test_set.size() << "\n";
  const auto result = train(train_set, config, seed, test_set.empty() ? nullptr : &test_set,
                            [](const EpochStats& s) {
                              std::cerr << "epoch " << s.epoch << "  loss " << s.train_loss << "  acc "
                                        << s.train_accuracy << "  val " << s.validation_accuracy << "\n";
                            });
  if (history_path.empty() || history_path == "-") {
    write_history_csv(std::cout, result.history);
  } else {
    std::ofstream out(history_path);
    if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + history_path);
    write_history_csv(out, result.history);
  }
  save_checkpoint(g.model_path, result.model);
  std::cerr << "saved " << g.model_path << "\n";
  return 0;
}

int run_evaluate(const GlobalOptions& g, const std::string& manifest, std::size_t per_class, std::uint64_t seed) {
  const LabeledDataset test_set = manifest.empty() ? synthetic_split(per_class, seed, SplitTag::Test)
                                                   : dataset::load_manifest_split(manifest, SplitTag::Test);
  const auto classifier = load_classifier(g.model_path);
  std::cout << format_report(evaluate(*classifier, test_set));
  return 0;
}

dataset::ClassTargets parse_targets(const std::string& text) {
  std::stringstream ss(text);
  std::string item;
  dataset::ClassTargets targets{};
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= kNumEmotions) throw Error(ErrorCode::InvalidArgument, "targets take four values");
    if (item == "all") {
      targets[i] = std::nullopt;
    } else {
      targets[i] = static_cast<std::size_t>(std::stoul(item));
    }
    ++i;
  }
  if (i != kNumEmotions) throw Error(ErrorCode::InvalidArgument, "targets take four values");
  return targets;
}

int run_prep(const std::string& annotations, const std::string& frames_root, const std::string& output_dir,
             std::uint64_t seed, const std::string& targets_text, std::size_t frames_per_clip, bool clip_level) {
  const auto labeled = dataset::label_clips(dataset::read_annotations_file(annotations));
  const auto sample = dataset::balanced_sample(labeled, parse_targets(targets_text), seed);
  dataset::ManifestOptions options;
  options.frames_per_clip = frames_per_clip;
  options.clip_level_split = clip_level;
  const auto manifest = dataset::build_manifest(sample, frames_root, output_dir, seed, options);
  const fs::path manifest_path = fs::path(output_dir) / "manifest.csv";
  dataset::save_manifest(manifest_path, manifest);

  std::cout << "class           clips   train    test\n";
  for (EmotionClass e : kAllEmotions) {
    const int c = code_of(e);
    std::printf("%-14s%7zu%8zu%8zu\n", std::string(label_of(e)).c_str(), manifest.clip_counts[c],
                manifest.count(c, SplitTag::Train), manifest.count(c, SplitTag::Test));
  }
  std::printf("%-14s%7zu%8zu%8zu\n", "total", sample.size(), manifest.count(SplitTag::Train),
              manifest.count(SplitTag::Test));
  std::cout << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

int run_export(const GlobalOptions& g, const std::string& output) {
  Store store(g.db_path);
  if (output.empty() || output == "-") {
    export_store(store, std::cout);
  } else {
    std::ofstream out(output);
    if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + output);
    export_store(store, out);
  }
  return 0;
}

int run_import(const GlobalOptions& g, const std::string& input) {
  Store store(g.db_path);
  std::ifstream in(input);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + input);
  import_store(store, in);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classroom attendance and emotion monitoring"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--db-path", g.db_path, "SQLite database file")->capture_default_str();
  app.add_option("--model-path", g.model_path, "Emotion model checkpoint")->capture_default_str();
  app.add_option("--listen-addr", g.listen_addr, "host:port for serve")->capture_default_str()->envname("LISTEN_ADDR");
  app.add_option("--capture-interval-ms", g.capture_interval_ms, "Camera capture interval")
      ->capture_default_str()
      ->envname("CAPTURE_INTERVAL_MS")
      ->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Run the HTTP API and detection gateway");
  std::string static_dir, enroll_file;
  serve->add_option("--static-dir", static_dir, "Dashboard assets to serve at /");
  serve->add_option("--enroll", enroll_file, "Enrollment file loaded at startup");

  auto* simulate = app.add_subcommand("simulate", "Play a synthetic classroom scenario");
  std::string scenario_path, gateway_url;
  bool compressed = false;
  simulate->add_option("--scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  simulate->add_flag("--compressed", compressed, "Run ticks back to back");
  simulate->add_option("--gateway", gateway_url, "Remote gateway URL; default runs in-process");

  auto* train_cmd = app.add_subcommand("train", "Train the emotion classifier");
  std::string manifest;
  std::size_t per_class = 200, test_per_class = 50;
  AdamConfig adam;
  std::uint64_t seed = 1;
  std::string history_path;
  train_cmd->add_option("--manifest", manifest, "Prepared manifest; default trains on synthetic crops");
  train_cmd->add_option("--synthetic-per-class", per_class, "Synthetic training crops per class")->capture_default_str();
  train_cmd->add_option("--synthetic-test-per-class", test_per_class, "Synthetic validation crops per class")
      ->capture_default_str();
  train_cmd->add_option("--epochs", adam.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", adam.batch_size)->capture_default_str();
  train_cmd->add_option("--learning-rate", adam.learning_rate)->capture_default_str();
  train_cmd->add_option("--seed", seed)->capture_default_str();
  train_cmd->add_option("--history", history_path, "Per-epoch CSV output (default stdout)");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score the model on a test split");
  eval_cmd->add_option("--manifest", manifest, "Prepared manifest; default uses synthetic crops");
  eval_cmd->add_option("--synthetic-per-class", per_class, "Synthetic test crops per class")->capture_default_str();
  eval_cmd->add_option("--seed", seed)->capture_default_str();

  auto* prep = app.add_subcommand("prep-daisee", "Prepare a DAiSEE frame manifest");
  std::string annotations, frames_root, output_dir = "prepared", targets = "40,40,40,all";
  std::size_t frames_per_clip = 10;
  bool clip_level = false;
  prep->add_option("--annotations", annotations, "Annotation CSV")->required()->check(CLI::ExistingFile);
  prep->add_option("--frames-root", frames_root, "Directory of per-clip frame folders")
      ->required()
      ->check(CLI::ExistingDirectory);
  prep->add_option("--seed", seed)->capture_default_str();
  prep->add_option("--output-dir", output_dir)->capture_default_str();
  prep->add_option("--targets", targets, "Clips per class: boredom,confusion,engagement,frustration ('all' = take all)")
      ->capture_default_str();
  prep->add_option("--frames-per-clip", frames_per_clip)->capture_default_str();
  prep->add_flag("--clip-level-split", clip_level, "Keep all frames of a clip in one split");

  auto* export_cmd = app.add_subcommand("export", "Dump the store as newline-delimited records");
  std::string export_path;
  export_cmd->add_option("--output", export_path, "Output file (default stdout)");

  auto* import_cmd = app.add_subcommand("import", "Load an export into the store");
  std::string import_path;
  import_cmd->add_option("--input", import_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) return run_serve(g, static_dir, enroll_file);
    if (simulate->parsed()) {
      const auto scenario = sim::load_scenario(scenario_path);
      return gateway_url.empty() ? run_simulate_local(g, scenario, compressed)
                                 : run_simulate_remote(scenario, compressed, gateway_url);
    }
    if (train_cmd->parsed()) return run_train(g, manifest, per_class, test_per_class, adam, seed, history_path);
    if (eval_cmd->parsed()) return run_evaluate(g, manifest, per_class, seed + 1);
    if (prep->parsed()) return run_prep(annotations, frames_root, output_dir, seed, targets, frames_per_clip, clip_level);
    if (export_cmd->parsed()) return run_export(g, export_path);
    if (import_cmd->parsed()) return run_import(g, import_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
