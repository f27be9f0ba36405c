#include "lcg/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lcg {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad numeric field: '" + s + "'");
  return v;
}

json world_to_json(const WorldSpec& w) {
  json jw;
  jw["d"] = w.d;
  for (const auto& c : w.components) jw["components"].push_back({{"mean", c.mean}, {"stddev", c.stddev}});
  for (const auto& a : w.attributes)
    jw["attributes"].push_back({{"name", a.name}, {"normal", a.normal}, {"offset", a.offset}});
  return jw;
}

WorldSpec world_from_json(const json& jw) {
  WorldSpec w;
  w.d = jw.at("d").get<int>();
  for (const auto& jc : jw.at("components"))
    w.components.push_back({jc.at("mean").get<Vec>(), jc.at("stddev").get<double>()});
  for (const auto& ja : jw.at("attributes"))
    w.attributes.push_back(
        {ja.at("name").get<std::string>(), ja.at("normal").get<Vec>(), ja.at("offset").get<double>()});
  w.validate();
  return w;
}

}  // namespace

void write_dataset_csv(const std::filesystem::path& csv_path, const AttributedDataset& ds) {
  std::ostringstream out;
  out << ds.d << ',' << ds.k();
  for (const auto& name : ds.attribute_names) out << ',' << name;
  out << '\n';
  const int n = ds.n();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < ds.d; ++j) {
      if (j) out << ',';
      out << format_double(ds.latents[static_cast<size_t>(i) * ds.d + j]);
    }
    for (int j = 0; j < ds.k(); ++j) out << ',' << static_cast<int>(ds.label(i, j));
    out << '\n';
  }
  write_text_file(csv_path, out.str());
}

void write_dataset_sidecar(const std::filesystem::path& json_path, const AttributedDataset& ds) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "dataset";
  j["n"] = ds.n();
  j["d"] = ds.d;
  j["k"] = ds.k();
  j["attribute_names"] = ds.attribute_names;
  j["seed"] = ds.seed;
  if (ds.provenance) j["world"] = world_to_json(*ds.provenance);
  write_text_file(json_path, j.dump(2) + "\n");
}

AttributedDataset read_dataset(const std::filesystem::path& csv_path,
                               const std::optional<std::filesystem::path>& sidecar_path) {
  std::istringstream in(read_text_file(csv_path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset file is empty: " + csv_path.string());
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw std::runtime_error("dataset header needs at least d and k");
  AttributedDataset ds;
  ds.d = static_cast<int>(parse_double(header[0]));
  const int k = static_cast<int>(parse_double(header[1]));
  if (static_cast<int>(header.size()) != 2 + k)
    throw std::runtime_error("dataset header attribute names do not match k");
  for (int j = 0; j < k; ++j) ds.attribute_names.push_back(header[2 + j]);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != ds.d + k)
      throw std::runtime_error("dataset row has wrong arity");
    for (int j = 0; j < ds.d; ++j) ds.latents.push_back(parse_double(fields[j]));
    for (int j = 0; j < k; ++j) {
      const double y = parse_double(fields[ds.d + j]);
      if (y != 0.0 && y != 1.0) throw std::runtime_error("dataset labels must be 0/1");
      ds.labels.push_back(static_cast<uint8_t>(y));
    }
  }
  if (sidecar_path && std::filesystem::exists(*sidecar_path)) {
    const json j = json::parse(read_text_file(*sidecar_path));
    ds.seed = j.value("seed", uint64_t{0});
    if (j.contains("world")) ds.provenance = world_from_json(j.at("world"));
  }
  return ds;
}

void write_samples_csv(const std::filesystem::path& path, const std::vector<Vec>& samples, int d) {
  std::ostringstream out;
  for (int j = 0; j < d; ++j) out << (j ? "," : "") << "z_" << (j + 1);
  out << '\n';
  for (const auto& z : samples) {
    if (static_cast<int>(z.size()) != d) throw std::invalid_argument("write_samples_csv: ragged sample");
    for (int j = 0; j < d; ++j) out << (j ? "," : "") << format_double(z[j]);
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<Vec> read_samples_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("samples file is empty: " + path.string());
  std::vector<Vec> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    Vec z;
    z.reserve(fields.size());
    for (const auto& f : fields) z.push_back(parse_double(f));
    samples.push_back(std::move(z));
  }
  return samples;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses) {
  std::ostringstream out;
  out << "step,loss\n";
  for (size_t i = 0; i < losses.size(); ++i) out << i << ',' << format_double(losses[i]) << '\n';
  write_text_file(path, out.str());
}

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "metric,attribute,value\n";
  for (const auto& r : rows) out << r.metric << ',' << r.attribute << ',' << r.value << '\n';
  write_text_file(path, out.str());
}

void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& labels,
                      const Matrix& m) {
  if (static_cast<int>(labels.size()) != m.cols)
    throw std::invalid_argument("write_matrix_csv: label/column mismatch");
  std::ostringstream out;
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (int i = 0; i < m.rows; ++i) {
    out << (i < static_cast<int>(labels.size()) && m.rows == m.cols ? labels[i] : "row" + std::to_string(i));
    for (int j = 0; j < m.cols; ++j) {
      const double v = m(i, j);
      out << ',' << (std::isnan(v) ? std::string("NA") : format_double(v));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

void save_denoiser(const std::filesystem::path& path, const Denoiser& net, const NoiseSchedule& s,
                   const std::map<std::string, double>& train_info) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "denoiser";
  j["schedule"] = {{"T", s.T}, {"b_start", s.b_start}, {"b_end", s.b_end}};
  j["latent_dim"] = net.latent_dim;
  j["embed_half"] = net.embed_half;
  j["dims"] = net.net.dims();
  j["activation"] = activation_name(net.net.activation());
  j["params"] = std::vector<double>(net.net.params().begin(), net.net.params().end());
  j["train"] = train_info;
  write_text_file(path, j.dump() + "\n");
}

std::pair<Denoiser, NoiseSchedule> load_denoiser(const std::filesystem::path& path) {
  const json j = json::parse(read_text_file(path));
  if (j.value("kind", "") != "denoiser") throw std::runtime_error("not a denoiser checkpoint: " + path.string());
  if (j.value("format_version", 0) != 1) throw std::runtime_error("unsupported checkpoint version");
  const auto& js = j.at("schedule");
  NoiseSchedule s = make_schedule(js.at("T").get<int>(), js.at("b_start").get<double>(),
                                  js.at("b_end").get<double>());
  Mlp net(j.at("dims").get<std::vector<int>>(), activation_from_name(j.at("activation")));
  const auto params = j.at("params").get<std::vector<double>>();
  if (static_cast<int>(params.size()) != net.param_count())
    throw std::runtime_error("checkpoint parameter count mismatch");
  std::copy(params.begin(), params.end(), net.params().begin());
  Denoiser d(j.at("latent_dim").get<int>(), j.at("embed_half").get<int>(), s.T, std::move(net));
  return {std::move(d), std::move(s)};
}

void save_classifier(const std::filesystem::path& path, const LatentClassifier& c,
                     const std::map<std::string, double>& train_info) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "classifier";
  j["attribute"] = c.attribute;
  j["train"] = train_info;
  if (c.kind == ClassifierKind::linear) {
    j["classifier_kind"] = "linear";
    j["w"] = c.w;
    j["b"] = c.b;
  } else {
    j["classifier_kind"] = "mlp";
    j["dims"] = c.net->dims();
    j["activation"] = activation_name(c.net->activation());
    j["params"] = std::vector<double>(c.net->params().begin(), c.net->params().end());
  }
  write_text_file(path, j.dump() + "\n");
}

LatentClassifier load_classifier(const std::filesystem::path& path) {
  const json j = json::parse(read_text_file(path));
  if (j.value("kind", "") != "classifier")
    throw std::runtime_error("not a classifier checkpoint: " + path.string());
  if (j.value("format_version", 0) != 1) throw std::runtime_error("unsupported checkpoint version");
  LatentClassifier c;
  c.attribute = j.at("attribute").get<std::string>();
  const std::string kind = j.at("classifier_kind").get<std::string>();
  if (kind == "linear") {
    c.kind = ClassifierKind::linear;
    c.w = j.at("w").get<Vec>();
    c.b = j.at("b").get<double>();
  } else if (kind == "mlp") {
    c.kind = ClassifierKind::mlp;
    Mlp net(j.at("dims").get<std::vector<int>>(), activation_from_name(j.at("activation")));
    const auto params = j.at("params").get<std::vector<double>>();
    if (static_cast<int>(params.size()) != net.param_count())
      throw std::runtime_error("checkpoint parameter count mismatch");
    std::copy(params.begin(), params.end(), net.params().begin());
    c.net = std::move(net);
  } else {
    throw std::runtime_error("unknown classifier kind: " + kind);
  }
  return c;
}

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(const std::string& s) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
  return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "run_manifest";
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["versions"] = {{"artifact", m.artifact_version}};
  j["wall_clock_utc"] = m.wall_clock_utc;
  j["seeds"] = m.seeds;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["metrics"] = m.metrics;
  write_text_file(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  const json j = json::parse(read_text_file(path));
  RunManifest m;
  m.command = j.value("command", "");
  m.config_hash = j.value("config_hash", "");
  m.artifact_version = j.at("versions").value("artifact", "");
  m.wall_clock_utc = j.value("wall_clock_utc", "");
  m.seeds = j.value("seeds", std::map<std::string, uint64_t>{});
  m.inputs = j.value("inputs", std::vector<std::string>{});
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.metrics = j.value("metrics", std::map<std::string, double>{});
  return m;
}

void write_scatter_svg(const std::filesystem::path& path, const WorldSpec& w,
                       const std::vector<Vec>& samples) {
  if (w.d < 2) throw std::invalid_argument("write_scatter_svg: need at least 2 dimensions");
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  double lo = -1.0, hi = 1.0;
  for (const auto& z : samples) {
    lo = std::min({lo, z[0], z[1]});
    hi = std::max({hi, z[0], z[1]});
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double span = hi - lo;
  const int size = 640;
  auto px = [&](double v) { return (v - lo) / span * size; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
  out << "<rect width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n";
  for (const auto& z : samples) {
    const auto labels = oracle_label(w, z);
    size_t combo = 0;
    for (size_t j = 0; j < labels.size(); ++j) combo = combo * 2 + labels[j];
    out << "<circle cx=\"" << px(z[0]) << "\" cy=\"" << size - px(z[1]) << "\" r=\"2\" fill=\""
        << kPalette[combo % 8] << "\" fill-opacity=\"0.7\"/>\n";
  }
  out << "</svg>\n";
  write_text_file(path, out.str());
}

}  // namespace lcg
