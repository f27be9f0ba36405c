#include "lcg/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iostream>
#include <set>
#include <stdexcept>

#include "lcg/elbo.hpp"
#include "lcg/errors.hpp"
#include "lcg/metrics.hpp"
#include "lcg/rng.hpp"

namespace lcg {

using nlohmann::json;

namespace {

void expect_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }))
      throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
  }
}

ScaleSchedule parse_scale(const json& j, const char* where) {
  if (j.is_number()) return ScaleSchedule::constant(j.get<double>());
  if (j.is_object()) {
    expect_keys(j, where, {"at_t1", "at_T"});
    return {j.at("at_t1").get<double>(), j.at("at_T").get<double>()};
  }
  throw std::invalid_argument(std::string("config: ") + where + " must be a number or {at_t1, at_T}");
}

WorldSpec parse_world_object(const json& jw) {
  expect_keys(jw, "world", {"d", "components", "attributes"});
  WorldSpec w;
  w.d = jw.at("d").get<int>();
  for (const auto& jc : jw.at("components")) {
    expect_keys(jc, "world.components[]", {"mean", "stddev"});
    w.components.push_back({jc.at("mean").get<Vec>(), jc.at("stddev").get<double>()});
  }
  for (const auto& ja : jw.at("attributes")) {
    expect_keys(ja, "world.attributes[]", {"name", "normal", "offset"});
    w.attributes.push_back(
        {ja.at("name").get<std::string>(), ja.at("normal").get<Vec>(), ja.value("offset", 0.0)});
  }
  w.validate();
  return w;
}

std::string now_utc() {
  const std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects inputs/outputs/metrics for one command run and writes the manifest
// last, so every artifact the run produced is listed.
struct ManifestBuilder {
  const ExperimentConfig& cfg;
  RunManifest m;

  ManifestBuilder(const ExperimentConfig& c, std::string command,
                  std::initializer_list<const char*> stages)
      : cfg(c) {
    m.command = std::move(command);
    m.config_hash = hash_hex(c.source_text + "\n#seed=" + std::to_string(c.seed) +
                             "\n#out=" + c.out.string());
    m.wall_clock_utc = now_utc();
    m.seeds["root"] = c.seed;
    for (const char* s : stages) m.seeds[s] = c.stage_seed(s);
  }

  void input(const std::filesystem::path& p) { m.inputs.push_back(p.string()); }
  void output(const std::filesystem::path& p) { m.outputs.push_back(p.string()); }
  void metric(const std::string& k, double v) { m.metrics[k] = v; }

  void write(const std::string& name) { write_manifest(cfg.out / (name + "_manifest.json"), m); }
};

std::vector<LabelCondition> term_targets(const std::vector<GuidanceTerm>& terms) {
  std::vector<LabelCondition> targets;
  for (const auto& t : terms)
    targets.push_back({t.attribute, t.polarity == Polarity::Assert ? 1 : 0});
  return targets;
}

std::pair<Denoiser, NoiseSchedule> load_denoiser_checked(const ExperimentConfig& cfg,
                                                         ManifestBuilder& mb) {
  const auto path = cfg.denoiser_file();
  if (!std::filesystem::exists(path))
    throw std::invalid_argument("missing denoiser checkpoint " + path.string() +
                                " (run `train --target diffusion` first)");
  mb.input(path);
  return load_denoiser(path);
}

ClassifierSet load_classifiers_checked(const ExperimentConfig& cfg,
                                       const std::vector<std::string>& attributes,
                                       ManifestBuilder& mb) {
  ClassifierSet set;
  for (const auto& a : attributes) {
    if (set.count(a)) continue;
    const auto path = cfg.classifier_file(a);
    if (!std::filesystem::exists(path))
      throw std::invalid_argument("missing classifier checkpoint " + path.string() +
                                  " (run `train --target classifier:" + a + "` first)");
    mb.input(path);
    set.emplace(a, load_classifier(path));
  }
  return set;
}

// Exact conditional moments when the targeted normals allow it; empty when
// they are not mutually orthogonal (the FID rows are then omitted).
std::optional<Moments> reference_moments(const WorldSpec& w,
                                         const std::vector<LabelCondition>& targets) {
  try {
    return targets.empty() ? world_moments(w) : oracle_conditional_moments(w, targets);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

double mean_of(const std::vector<double>& xs, size_t begin, size_t end) {
  double s = 0.0;
  for (size_t i = begin; i < end; ++i) s += xs[i];
  return s / static_cast<double>(end - begin);
}

}  // namespace

WorldSpec ExperimentConfig::world() const {
  return inline_world ? *inline_world : standard_world(world_preset_from_name(world_preset));
}

double ExperimentConfig::schedule_b_start() const {
  return b_start ? *b_start : 1e-4 * (1000.0 / T);
}

double ExperimentConfig::schedule_b_end() const {
  return b_end ? *b_end : 0.02 * (1000.0 / T);
}

NoiseSchedule ExperimentConfig::schedule() const {
  return make_schedule(T, schedule_b_start(), schedule_b_end());
}

int ExperimentConfig::effective_t_start() const { return t_start ? *t_start : T / 2; }

std::vector<std::string> ExperimentConfig::attributes_to_train() const {
  if (!classifier_attributes.empty()) return classifier_attributes;
  std::vector<std::string> names;
  for (const auto& a : world().attributes) names.push_back(a.name);
  return names;
}

std::filesystem::path ExperimentConfig::dataset_csv() const {
  return dataset_path ? *dataset_path : out / "dataset.csv";
}

std::filesystem::path ExperimentConfig::dataset_sidecar() const {
  std::filesystem::path p = dataset_csv();
  p.replace_extension(".json");
  return p;
}

std::filesystem::path ExperimentConfig::denoiser_file() const {
  return denoiser_path ? *denoiser_path : out / "denoiser.json";
}

std::filesystem::path ExperimentConfig::classifier_file(const std::string& attribute) const {
  return out / ("classifier_" + attribute + ".json");
}

std::filesystem::path ExperimentConfig::samples_file() const {
  return samples_path ? *samples_path : out / "samples.csv";
}

void ExperimentConfig::require_seed() const {
  if (!seed_set)
    throw std::invalid_argument("a seed is required (config key \"seed\" or --seed); runs never "
                                "derive seeds from the clock");
}

uint64_t ExperimentConfig::stage_seed(std::string_view stage) const {
  return Rng::derive_seed(seed, stage);
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  expect_keys(j, "top level",
              {"world", "n", "schedule", "denoiser", "train", "classifier", "guidance", "sampler",
               "eta", "n_samples", "t_start", "edits", "elbo", "seed", "out", "dataset",
               "denoiser_file", "samples"});

  ExperimentConfig cfg;
  cfg.source_text = json_text;

  if (j.contains("world")) {
    if (j["world"].is_string()) {
      cfg.world_preset = j["world"].get<std::string>();
      world_preset_from_name(cfg.world_preset);  // validate early
    } else {
      cfg.inline_world = parse_world_object(j["world"]);
    }
  }
  cfg.n = j.value("n", cfg.n);
  if (cfg.n < 0) throw std::invalid_argument("config: n must be >= 0");

  if (j.contains("schedule")) {
    const auto& js = j["schedule"];
    expect_keys(js, "schedule", {"T", "b_start", "b_end"});
    cfg.T = js.value("T", cfg.T);
    if (js.contains("b_start")) cfg.b_start = js["b_start"].get<double>();
    if (js.contains("b_end")) cfg.b_end = js["b_end"].get<double>();
  }

  if (j.contains("denoiser")) {
    const auto& jd = j["denoiser"];
    expect_keys(jd, "denoiser", {"hidden", "activation", "embed_dim"});
    cfg.hidden = jd.value("hidden", cfg.hidden);
    if (jd.contains("activation")) cfg.activation = activation_from_name(jd["activation"]);
    cfg.embed_dim = jd.value("embed_dim", cfg.embed_dim);
  }

  if (j.contains("train")) {
    const auto& jt = j["train"];
    expect_keys(jt, "train", {"steps", "batch", "lr"});
    cfg.train.steps = jt.value("steps", cfg.train.steps);
    cfg.train.batch = jt.value("batch", cfg.train.batch);
    cfg.train.lr = jt.value("lr", cfg.train.lr);
  }

  if (j.contains("classifier")) {
    const auto& jc = j["classifier"];
    expect_keys(jc, "classifier",
                {"kind", "epochs", "lr", "l2", "batch", "val_fraction", "hidden", "attributes"});
    if (jc.contains("kind")) {
      const std::string kind = jc["kind"].get<std::string>();
      if (kind == "linear") cfg.classifier_kind = ClassifierKind::linear;
      else if (kind == "mlp") cfg.classifier_kind = ClassifierKind::mlp;
      else throw std::invalid_argument("config: classifier.kind must be linear or mlp");
    }
    cfg.classifier_train.epochs = jc.value("epochs", cfg.classifier_train.epochs);
    cfg.classifier_train.lr = jc.value("lr", cfg.classifier_train.lr);
    cfg.classifier_train.l2 = jc.value("l2", cfg.classifier_train.l2);
    cfg.classifier_train.batch = jc.value("batch", cfg.classifier_train.batch);
    cfg.classifier_train.val_fraction = jc.value("val_fraction", cfg.classifier_train.val_fraction);
    cfg.classifier_train.hidden = jc.value("hidden", cfg.classifier_train.hidden);
    cfg.classifier_attributes = jc.value("attributes", cfg.classifier_attributes);
  }

  if (j.contains("guidance")) {
    const auto& jg = j["guidance"];
    expect_keys(jg, "guidance", {"terms", "source"});
    if (jg.contains("terms")) {
      for (const auto& jt : jg["terms"]) {
        expect_keys(jt, "guidance.terms[]", {"attribute", "polarity", "scale"});
        GuidanceTerm term;
        term.attribute = jt.at("attribute").get<std::string>();
        const std::string pol = jt.value("polarity", "assert");
        if (pol == "assert") term.polarity = Polarity::Assert;
        else if (pol == "negate") term.polarity = Polarity::Negate;
        else throw std::invalid_argument("config: polarity must be assert or negate");
        term.scale = jt.contains("scale") ? parse_scale(jt["scale"], "guidance.terms[].scale")
                                          : ScaleSchedule::constant(1.0);
        cfg.guidance_terms.push_back(std::move(term));
      }
    }
    if (jg.contains("source")) {
      const auto& jsrc = jg["source"];
      expect_keys(jsrc, "guidance.source", {"gamma", "sigma2"});
      cfg.source_gamma = parse_scale(jsrc.at("gamma"), "guidance.source.gamma");
      cfg.source_sigma2 = jsrc.value("sigma2", cfg.source_sigma2);
      if (!(cfg.source_sigma2 > 0.0))
        throw std::invalid_argument("config: guidance.source.sigma2 must be positive");
    }
  }

  if (j.contains("sampler")) cfg.sampler = sampler_from_name(j["sampler"].get<std::string>());
  cfg.eta = j.value("eta", cfg.eta);
  cfg.n_samples = j.value("n_samples", cfg.n_samples);
  if (cfg.n_samples < 0) throw std::invalid_argument("config: n_samples must be >= 0");
  if (j.contains("t_start")) cfg.t_start = j["t_start"].get<int>();

  if (j.contains("edits")) {
    for (const auto& je : j["edits"]) {
      expect_keys(je, "edits[]", {"attribute", "value", "alpha", "gamma"});
      EditSpec e;
      e.attribute = je.at("attribute").get<std::string>();
      e.value = je.value("value", 1);
      if (e.value != 0 && e.value != 1)
        throw std::invalid_argument("config: edits[].value must be 0 or 1");
      e.alpha = je.value("alpha", e.alpha);
      e.gamma = je.value("gamma", e.gamma);
      cfg.edits.push_back(std::move(e));
    }
  }

  if (j.contains("elbo")) {
    const auto& je = j["elbo"];
    expect_keys(je, "elbo", {"mc", "n"});
    cfg.elbo_mc = je.value("mc", cfg.elbo_mc);
    cfg.elbo_n = je.value("n", cfg.elbo_n);
    if (cfg.elbo_mc < 1 || cfg.elbo_n < 1)
      throw std::invalid_argument("config: elbo.mc and elbo.n must be >= 1");
  }

  if (j.contains("seed")) {
    cfg.seed = j["seed"].get<uint64_t>();
    cfg.seed_set = true;
  }
  if (j.contains("out")) cfg.out = j["out"].get<std::string>();
  if (j.contains("dataset")) cfg.dataset_path = j["dataset"].get<std::string>();
  if (j.contains("denoiser_file")) cfg.denoiser_path = j["denoiser_file"].get<std::string>();
  if (j.contains("samples")) cfg.samples_path = j["samples"].get<std::string>();

  return cfg;
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path) {
  if (!path) return parse_config("{}");
  if (!std::filesystem::exists(*path))
    throw std::invalid_argument("config file not found: " + path->string());
  return parse_config(read_text_file(*path));
}

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& o) {
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.seed_set = true;
  }
  if (o.out) cfg.out = *o.out;
  if (o.sampler) cfg.sampler = sampler_from_name(*o.sampler);
  if (o.t_start) cfg.t_start = *o.t_start;
}

void run_genworld(const ExperimentConfig& cfg) {
  cfg.require_seed();
  const WorldSpec w = cfg.world();
  ManifestBuilder mb(cfg, "genworld", {"world"});

  AttributedDataset ds;
  if (cfg.n == 0) {
    ds.d = w.d;
    for (const auto& a : w.attributes) ds.attribute_names.push_back(a.name);
    ds.provenance = w;
    ds.seed = cfg.stage_seed("world");
  } else {
    Rng rng(cfg.stage_seed("world"));
    ds = sample_dataset(w, cfg.n, rng);
  }

  const auto csv = cfg.dataset_csv();
  const auto sidecar = cfg.dataset_sidecar();
  write_dataset_csv(csv, ds);
  write_dataset_sidecar(sidecar, ds);
  mb.output(csv);
  mb.output(sidecar);
  mb.metric("n", static_cast<double>(ds.n()));
  mb.metric("d", static_cast<double>(ds.d));
  mb.write("genworld");
  std::cout << "genworld: wrote " << ds.n() << " samples to " << csv.string() << "\n";
}

void run_train(const ExperimentConfig& cfg, const std::string& target) {
  cfg.require_seed();
  const auto ds_path = cfg.dataset_csv();
  if (!std::filesystem::exists(ds_path))
    throw std::invalid_argument("missing dataset " + ds_path.string() + " (run `genworld` first)");

  if (target == "diffusion") {
    ManifestBuilder mb(cfg, "train diffusion", {"train"});
    mb.input(ds_path);
    const AttributedDataset data = read_dataset(ds_path, cfg.dataset_sidecar());
    if (data.n() == 0) throw std::invalid_argument("train: dataset is empty");
    const NoiseSchedule s = cfg.schedule();
    Rng rng(cfg.stage_seed("train"));
    Denoiser net = Denoiser::create(data.d, cfg.hidden, cfg.activation, s, rng, cfg.embed_dim);
    const auto losses = train_denoiser(s, data, net, cfg.train, rng);

    std::map<std::string, double> info;
    info["steps"] = static_cast<double>(losses.size());
    if (!losses.empty()) {
      const size_t dec = std::max<size_t>(1, losses.size() / 10);
      info["first_decile_loss"] = mean_of(losses, 0, dec);
      info["last_decile_loss"] = mean_of(losses, losses.size() - dec, losses.size());
      info["final_loss"] = losses.back();
    }
    const auto ckpt = cfg.denoiser_file();
    const auto loss_csv = cfg.out / "diffusion_loss.csv";
    save_denoiser(ckpt, net, s, info);
    write_loss_csv(loss_csv, losses);
    mb.output(ckpt);
    mb.output(loss_csv);
    for (const auto& [k, v] : info) mb.metric(k, v);
    mb.write("train_diffusion");
    std::cout << "train diffusion: " << losses.size() << " steps, final loss "
              << (losses.empty() ? 0.0 : losses.back()) << "\n";
    return;
  }

  if (target.rfind("classifier:", 0) == 0) {
    const std::string attr = target.substr(std::string("classifier:").size());
    if (attr.empty()) throw std::invalid_argument("train: classifier target needs an attribute name");
    ManifestBuilder mb(cfg, "train " + target, {"train"});
    mb.input(ds_path);
    const AttributedDataset data = read_dataset(ds_path, cfg.dataset_sidecar());
    Rng rng = Rng(cfg.stage_seed("train")).substream(attr);
    ClassifierTrainReport report;
    const LatentClassifier c =
        train_classifier(cfg.classifier_kind, data, attr, cfg.classifier_train, rng, &report);

    const std::map<std::string, double> info = {
        {"train_accuracy", report.train_accuracy}, {"val_accuracy", report.val_accuracy},
        {"final_loss", report.final_loss},         {"n_train", static_cast<double>(report.n_train)},
        {"n_val", static_cast<double>(report.n_val)}};
    const auto ckpt = cfg.classifier_file(attr);
    save_classifier(ckpt, c, info);
    mb.output(ckpt);
    for (const auto& [k, v] : info) mb.metric(k, v);
    mb.write("train_classifier_" + attr);
    std::cout << "train " << target << ": val accuracy " << report.val_accuracy << "\n";
    return;
  }

  throw std::invalid_argument("train: target must be `diffusion` or `classifier:<attribute>`");
}

void run_compose(const ExperimentConfig& cfg) {
  cfg.require_seed();
  const WorldSpec w = cfg.world();
  ManifestBuilder mb(cfg, "compose", {"sample"});

  auto [net, s] = load_denoiser_checked(cfg, mb);
  std::vector<std::string> needed;
  for (const auto& t : cfg.guidance_terms) needed.push_back(t.attribute);
  const ClassifierSet classifiers = load_classifiers_checked(cfg, needed, mb);

  GuidanceSpec spec;
  spec.terms = cfg.guidance_terms;

  Rng rng(cfg.stage_seed("sample"));
  std::vector<Vec> samples;
  if (spec.terms.empty()) {
    samples = sample(s, net, cfg.n_samples, cfg.sampler, {}, rng, cfg.eta);
  } else {
    samples = guided_sample(spec, net, classifiers, s, cfg.n_samples, cfg.sampler, rng, cfg.eta);
  }

  const auto samples_path = cfg.samples_file();
  write_samples_csv(samples_path, samples, w.d);
  mb.output(samples_path);

  const bool zero_scales = std::all_of(spec.terms.begin(), spec.terms.end(), [](const auto& t) {
    return t.scale.at_t1 == 0.0 && t.scale.at_T == 0.0;
  });
  const auto targets = term_targets(spec.terms);

  std::vector<ReportRow> rows;
  rows.push_back({"n", "", std::to_string(samples.size())});
  rows.push_back({"sampler", "", sampler_name(cfg.sampler)});
  rows.push_back({"unconditional_baseline", "", spec.terms.empty() || zero_scales ? "1" : "0"});
  for (const auto& c : targets) rows.push_back({"target", c.attribute, std::to_string(c.value)});
  for (const auto& e : acc(w, samples, targets)) {
    rows.push_back({"acc", e.attribute, format_double(e.accuracy)});
    mb.metric("acc_" + e.attribute, e.accuracy);
  }
  if (const auto ref = reference_moments(w, targets);
      ref && static_cast<int>(samples.size()) >= w.d + 1) {
    const double fid = latent_fid(samples, ref->mean, ref->cov);
    rows.push_back({"latent_fid", "", format_double(fid)});
    mb.metric("latent_fid", fid);
  }

  const auto report_path = cfg.out / "compose_report.csv";
  write_report_csv(report_path, rows);
  mb.output(report_path);
  mb.write("compose");
  std::cout << "compose: wrote " << samples.size() << " samples and " << report_path.string()
            << "\n";
}

namespace {

// Shared by the paired and the sequential edit paths.
struct EditContext {
  const ExperimentConfig& cfg;
  const WorldSpec world;
  std::vector<Vec> sources;
  Rng chain_root;  // one child stream per source index

  EditContext(const ExperimentConfig& c, WorldSpec w)
      : cfg(c), world(std::move(w)), chain_root(Rng(c.stage_seed("sample")).substream("chains")) {
    Rng src_rng = Rng(c.stage_seed("sample")).substream("sources");
    sources.resize(static_cast<size_t>(c.n_samples));
    for (auto& z : sources) z = sample_world_point(world, src_rng);
  }
};

void write_edit_report(const ExperimentConfig& cfg, ManifestBuilder& mb, const EditContext& ctx,
                       const std::string& mode_name, const std::vector<Vec>& edited,
                       const std::vector<LabelCondition>& targets) {
  const auto edited_path = cfg.out / ("edited_" + mode_name + ".csv");
  write_samples_csv(edited_path, edited, ctx.world.d);
  mb.output(edited_path);

  std::vector<ReportRow> rows;
  rows.push_back({"mode", "", mode_name});
  rows.push_back({"n", "", std::to_string(edited.size())});
  for (const auto& c : targets) rows.push_back({"target", c.attribute, std::to_string(c.value)});
  for (const auto& e : acc(ctx.world, edited, targets)) {
    rows.push_back({"acc", e.attribute, format_double(e.accuracy)});
    mb.metric("acc_" + e.attribute + "_" + mode_name, e.accuracy);
  }
  if (const auto ref = reference_moments(ctx.world, targets);
      ref && static_cast<int>(edited.size()) >= ctx.world.d + 1) {
    const double fid = latent_fid(edited, ref->mean, ref->cov);
    const double fid_sources = latent_fid(ctx.sources, ref->mean, ref->cov);
    rows.push_back({"latent_fid", "", format_double(fid)});
    rows.push_back({"latent_fid_sources", "", format_double(fid_sources)});
    mb.metric("latent_fid_" + mode_name, fid);
    mb.metric("latent_fid_sources", fid_sources);
  }
  const IdentityReport id = identity_distance(ctx.sources, edited);
  rows.push_back({"identity_mean", "", format_double(id.mean)});
  rows.push_back({"identity_q50", "", format_double(id.quantile(0.5))});
  rows.push_back({"identity_q90", "", format_double(id.quantile(0.9))});
  mb.metric("identity_mean_" + mode_name, id.mean);

  const auto report_path = cfg.out / ("edit_report_" + mode_name + ".csv");
  write_report_csv(report_path, rows);
  mb.output(report_path);
}

}  // namespace

void run_edit(const ExperimentConfig& cfg, bool linear_only, bool sequential) {
  cfg.require_seed();
  if (!cfg.source_gamma)
    throw std::invalid_argument("edit: config guidance.source.gamma is required");
  const WorldSpec w = cfg.world();
  ManifestBuilder mb(cfg, sequential ? "edit --sequential" : "edit", {"sample"});

  std::optional<std::pair<Denoiser, NoiseSchedule>> diffusion;
  if (!linear_only) diffusion = load_denoiser_checked(cfg, mb);
  // Diffusion edits run against the schedule the checkpoint was trained with.
  const NoiseSchedule s = diffusion ? diffusion->second : cfg.schedule();
  const int t_start = cfg.t_start ? *cfg.t_start : s.T / 2;

  std::vector<std::string> needed;
  if (sequential) {
    if (cfg.edits.empty())
      throw std::invalid_argument("edit --sequential: config key `edits` is empty");
    for (const auto& e : cfg.edits) needed.push_back(e.attribute);
  } else {
    if (cfg.guidance_terms.empty())
      throw std::invalid_argument("edit: config guidance.terms is empty");
    for (const auto& t : cfg.guidance_terms) needed.push_back(t.attribute);
  }
  const ClassifierSet classifiers = load_classifiers_checked(cfg, needed, mb);

  EditContext ctx(cfg, w);
  const auto sources_path = cfg.out / "sources.csv";
  write_samples_csv(sources_path, ctx.sources, w.d);
  mb.output(sources_path);

  if (sequential) {
    // Fixed targets per edit; intermediate latents are written per step.
    const size_t m = cfg.edits.size();
    std::vector<std::vector<Vec>> inter(m, std::vector<Vec>(ctx.sources.size()));
    for (size_t i = 0; i < ctx.sources.size(); ++i) {
      if (linear_only) {
        Vec z = ctx.sources[i];
        for (size_t k = 0; k < m; ++k) {
          const auto& e = cfg.edits[k];
          GuidanceTerm term{e.attribute, e.value == 1 ? Polarity::Assert : Polarity::Negate,
                            ScaleSchedule::constant(e.alpha)};
          z = linear_solution({term}, {z, ScaleSchedule::constant(e.gamma), cfg.source_sigma2},
                              classifiers);
          inter[k][i] = z;
        }
      } else {
        std::vector<GuidanceSpec> specs;
        for (const auto& e : cfg.edits) {
          GuidanceSpec spec;
          spec.terms.push_back({e.attribute, e.value == 1 ? Polarity::Assert : Polarity::Negate,
                                ScaleSchedule::constant(e.alpha)});
          spec.source = SourceTerm{{}, ScaleSchedule::constant(e.gamma), cfg.source_sigma2};
          specs.push_back(std::move(spec));
        }
        Rng r = ctx.chain_root.substream(i);
        const auto outs = sequential_edit(std::move(specs), diffusion->first, classifiers, s,
                                          ctx.sources[i], t_start, r, cfg.sampler);
        for (size_t k = 0; k < m; ++k) inter[k][i] = outs[k];
      }
    }
    std::vector<ReportRow> rows;
    rows.push_back({"mode", "", linear_only ? "linear" : "diffusion"});
    rows.push_back({"n", "", std::to_string(ctx.sources.size())});
    for (size_t k = 0; k < m; ++k) {
      const auto step_path = cfg.out / ("edit_step_" + std::to_string(k + 1) + ".csv");
      write_samples_csv(step_path, inter[k], w.d);
      mb.output(step_path);
      // Accuracy of every target asserted so far, measured after this step.
      std::vector<LabelCondition> so_far;
      for (size_t kk = 0; kk <= k; ++kk) so_far.push_back({cfg.edits[kk].attribute, cfg.edits[kk].value});
      for (const auto& e : acc(w, inter[k], so_far)) {
        rows.push_back({"acc_step_" + std::to_string(k + 1), e.attribute, format_double(e.accuracy)});
        if (k + 1 == m) mb.metric("acc_final_" + e.attribute, e.accuracy);
      }
    }
    const IdentityReport id = identity_distance(ctx.sources, inter.back());
    rows.push_back({"identity_mean", "", format_double(id.mean)});
    mb.metric("identity_mean", id.mean);
    const auto report_path = cfg.out / "edit_report_sequential.csv";
    write_report_csv(report_path, rows);
    mb.output(report_path);
    mb.write("edit");
    std::cout << "edit --sequential: " << m << " steps over " << ctx.sources.size() << " sources\n";
    return;
  }

  const auto targets = term_targets(cfg.guidance_terms);

  std::vector<Vec> linear_edits(ctx.sources.size());
  for (size_t i = 0; i < ctx.sources.size(); ++i)
    linear_edits[i] = linear_solution(
        cfg.guidance_terms, {ctx.sources[i], *cfg.source_gamma, cfg.source_sigma2}, classifiers);
  write_edit_report(cfg, mb, ctx, "linear", linear_edits, targets);

  if (!linear_only) {
    std::vector<Vec> diffusion_edits(ctx.sources.size());
    for (size_t i = 0; i < ctx.sources.size(); ++i) {
      GuidanceSpec spec;
      spec.terms = cfg.guidance_terms;
      spec.source = SourceTerm{ctx.sources[i], *cfg.source_gamma, cfg.source_sigma2};
      Rng r = ctx.chain_root.substream(i);
      diffusion_edits[i] = manipulate(spec, diffusion->first, classifiers, s, ctx.sources[i],
                                      t_start, r, cfg.sampler, cfg.eta);
    }
    write_edit_report(cfg, mb, ctx, "diffusion", diffusion_edits, targets);
  }

  mb.write("edit");
  std::cout << "edit: " << ctx.sources.size() << " sources, "
            << (linear_only ? "linear mode" : "linear + diffusion modes") << "\n";
}

void run_eval(const ExperimentConfig& cfg) {
  cfg.require_seed();
  const WorldSpec w = cfg.world();
  ManifestBuilder mb(cfg, "eval", {});

  const auto samples_path = cfg.samples_file();
  if (!std::filesystem::exists(samples_path))
    throw std::invalid_argument("eval: sample file not found: " + samples_path.string());
  mb.input(samples_path);
  const auto samples = read_samples_csv(samples_path);
  if (samples.empty())
    throw std::invalid_argument("eval: sample file has no rows: " + samples_path.string());

  std::vector<ReportRow> rows;
  rows.push_back({"n", "", std::to_string(samples.size())});
  for (size_t a = 0; a < w.attributes.size(); ++a) {
    double pos = 0.0;
    for (const auto& z : samples) pos += oracle_label(w, z)[a];
    pos /= static_cast<double>(samples.size());
    rows.push_back({"positive_rate", w.attributes[a].name, format_double(pos)});
    mb.metric("positive_rate_" + w.attributes[a].name, pos);
  }
  const auto targets = term_targets(cfg.guidance_terms);
  for (const auto& e : acc(w, samples, targets)) {
    rows.push_back({"acc", e.attribute, format_double(e.accuracy)});
    mb.metric("acc_" + e.attribute, e.accuracy);
  }
  if (static_cast<int>(samples.size()) >= w.d + 1) {
    const Moments ref = world_moments(w);
    const double fid = latent_fid(samples, ref.mean, ref.cov);
    rows.push_back({"latent_fid_world", "", format_double(fid)});
    mb.metric("latent_fid_world", fid);
  }

  const auto report_path = cfg.out / "eval_report.csv";
  write_report_csv(report_path, rows);
  mb.output(report_path);
  mb.write("eval");
  std::cout << "eval: " << samples.size() << " samples, report " << report_path.string() << "\n";
}

void run_plot(const ExperimentConfig& cfg) {
  cfg.require_seed();
  const WorldSpec w = cfg.world();
  ManifestBuilder mb(cfg, "plot", {});

  const auto samples_path = cfg.samples_file();
  if (!std::filesystem::exists(samples_path))
    throw std::invalid_argument("plot: sample file not found: " + samples_path.string());
  mb.input(samples_path);
  const auto samples = read_samples_csv(samples_path);

  const auto svg_path = cfg.out / "scatter.svg";
  write_scatter_svg(svg_path, w, samples);
  mb.output(svg_path);

  // Pairwise weight-direction cosines for whichever linear heads are on disk.
  std::vector<LatentClassifier> heads;
  std::vector<std::string> labels;
  for (const auto& a : w.attributes) {
    const auto path = cfg.classifier_file(a.name);
    if (!std::filesystem::exists(path)) continue;
    LatentClassifier c = load_classifier(path);
    if (c.kind != ClassifierKind::linear) continue;
    mb.input(path);
    labels.push_back(a.name);
    heads.push_back(std::move(c));
  }
  if (!heads.empty()) {
    std::vector<const LatentClassifier*> ptrs;
    for (const auto& h : heads) ptrs.push_back(&h);
    const Matrix corr = pairwise_correlation(ptrs);
    const auto corr_path = cfg.out / "classifier_correlation.csv";
    write_matrix_csv(corr_path, labels, corr);
    mb.output(corr_path);
  }

  mb.write("plot");
  std::cout << "plot: scatter of " << samples.size() << " samples"
            << (heads.empty() ? "" : ", correlation of " + std::to_string(heads.size()) + " heads")
            << "\n";
}

int run_elbo_check(const ExperimentConfig& cfg) {
  cfg.require_seed();
  const WorldSpec w = cfg.world();
  ManifestBuilder mb(cfg, "elbo-check", {"train", "eval"});

  // The decomposition holds for any noise predictor, so a trained checkpoint
  // is used when present and a randomly initialized net otherwise.
  Denoiser net;
  NoiseSchedule s = cfg.schedule();
  if (std::filesystem::exists(cfg.denoiser_file())) {
    auto loaded = load_denoiser(cfg.denoiser_file());
    net = std::move(loaded.first);
    s = std::move(loaded.second);
    mb.input(cfg.denoiser_file());
  } else {
    Rng rng(cfg.stage_seed("train"));
    net = Denoiser::create(w.d, cfg.hidden, cfg.activation, s, rng, cfg.embed_dim);
  }

  ClassifierSet classifiers;
  std::vector<LabelCondition> conditions;
  for (const auto& a : w.attributes) {
    classifiers.emplace(a.name, LatentClassifier::linear_from(a.name, a.normal, a.offset));
    conditions.push_back({a.name, 1});
  }

  Rng eval_rng(cfg.stage_seed("eval"));
  double max_residual = 0.0;
  for (int i = 0; i < cfg.elbo_n; ++i) {
    const Vec z0 = sample_world_point(w, eval_rng);
    const uint64_t draw_seed = eval_rng.substream(static_cast<uint64_t>(i)).seed();
    Rng r_cond(draw_seed);
    Rng r_uncond(draw_seed);
    const ElboReport cond = elbo_conditional(s, net, classifiers, conditions, z0, r_cond, cfg.elbo_mc);
    const ElboReport uncond = elbo_unconditional(s, net, z0, r_uncond, cfg.elbo_mc);
    const double residual = std::abs((cond.total - uncond.total) - cond.classifier_term);
    max_residual = std::max(max_residual, residual);
  }

  mb.metric("max_residual", max_residual);
  mb.metric("n_z0", cfg.elbo_n);
  mb.metric("mc_draws", cfg.elbo_mc);
  mb.write("elbo_check");
  std::cout << "elbo-check: max residual " << format_double(max_residual) << " over " << cfg.elbo_n
            << " draws (mc = " << cfg.elbo_mc << ", T = " << s.T << ")\n";
  if (!(max_residual < 1e-9)) {
    std::cerr << "elbo-check: residual exceeds 1e-9\n";
    return 2;
  }
  return 0;
}

}  // namespace lcg
