#include "octa/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace octa {

namespace {

constexpr char kMagic[8] = {'O', 'C', 'T', 'A', 'C', 'K', 'P', 'T'};

void write_u64(std::ofstream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint64_t read_u64(std::ifstream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::map<std::string, std::vector<float>> read_weight_groups(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint weights: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("corrupted or foreign checkpoint file: " + path);
  uint64_t n = read_u64(in);
  std::map<std::string, std::vector<float>> groups;
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t name_len = read_u64(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    uint64_t count = read_u64(in);
    std::vector<float> w(count);
    in.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw std::runtime_error("corrupted or foreign checkpoint file: " + path);
    groups.emplace(std::move(name), std::move(w));
  }
  return groups;
}

}  // namespace

uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

void save_checkpoint(const std::string& weights_path, const std::string& meta_path, Model& model,
                     CheckpointRecord& record) {
  {
    std::ofstream out(weights_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + weights_path);
    out.write(kMagic, 8);
    auto params = model.params();
    write_u64(out, params.size());
    for (nn::Param* p : params) {
      write_u64(out, p->name.size());
      out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
      write_u64(out, p->w.size());
      out.write(reinterpret_cast<const char*>(p->w.data()),
                static_cast<std::streamsize>(p->w.size() * sizeof(float)));
    }
  }
  record.weights_path = weights_path;
  record.spec = model.spec();
  record.weights_hash = file_hash(weights_path);

  std::ofstream meta(meta_path);
  if (!meta) throw std::runtime_error("cannot write checkpoint meta: " + meta_path);
  meta << "arch = " << record.spec.arch << "\n"
       << "task = " << task_name(record.spec.task) << "\n"
       << "encoder = " << record.spec.encoder << "\n"
       << "num_outputs = " << record.spec.num_outputs << "\n"
       << "input_size = " << record.spec.input_size << "\n"
       << "pretrain_source = " << record.spec.pretrain_source << "\n"
       << "fold_id = " << record.fold_id << "\n"
       << "epoch = " << record.epoch << "\n"
       << "val_metric_name = " << record.val_metric_name << "\n"
       << "val_metric_value = " << std::setprecision(12) << record.val_metric_value << "\n"
       << "seed = " << record.seed << "\n"
       << "weights_hash = " << std::hex << record.weights_hash << std::dec << "\n"
       << "weights_file = " << fs::path(weights_path).filename().string() << "\n";
}

CheckpointRecord read_checkpoint_meta(const std::string& meta_path) {
  std::ifstream in(meta_path);
  if (!in) throw std::runtime_error("cannot open checkpoint meta: " + meta_path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto need = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end())
      throw std::runtime_error("checkpoint meta missing key '" + key + "': " + meta_path);
    return it->second;
  };

  CheckpointRecord r;
  r.spec.arch = need("arch");
  r.spec.task = task_from_name(need("task"));
  r.spec.encoder = kv.count("encoder") ? kv["encoder"] : "";
  r.spec.num_outputs = std::stoi(need("num_outputs"));
  r.spec.input_size = std::stoi(need("input_size"));
  r.spec.pretrain_source = kv.count("pretrain_source") ? kv["pretrain_source"] : "none";
  r.fold_id = std::stoi(need("fold_id"));
  r.epoch = std::stoi(need("epoch"));
  r.val_metric_name = need("val_metric_name");
  r.val_metric_value = std::stod(need("val_metric_value"));
  r.seed = std::stoull(need("seed"));
  r.weights_hash = std::stoull(need("weights_hash"), nullptr, 16);
  r.weights_path = (fs::path(meta_path).parent_path() / need("weights_file")).string();
  if (!fs::exists(r.weights_path))
    throw std::runtime_error("checkpoint weights file missing: " + r.weights_path);
  return r;
}

std::unique_ptr<Model> load_checkpoint(const CheckpointRecord& record) {
  auto model = build_model(record.spec, record.seed);
  auto groups = read_weight_groups(record.weights_path);
  for (nn::Param* p : model->params()) {
    auto it = groups.find(p->name);
    if (it == groups.end() || it->second.size() != p->w.size())
      throw std::runtime_error("checkpoint does not match model spec (group '" + p->name +
                               "'): " + record.weights_path);
    p->w = it->second;
  }
  return model;
}

AdaptReport adapt_pretrained(Model& model, const std::string& weights_path, bool strict_head,
                             uint64_t reinit_seed) {
  auto groups = read_weight_groups(weights_path);
  AdaptReport report;
  bool reinit_needed = false;
  for (nn::Param* p : model.params()) {
    auto it = groups.find(p->name);
    bool is_head = p->name.rfind("head.", 0) == 0;
    if (it != groups.end() && it->second.size() == p->w.size()) {
      p->w = it->second;
      report.loaded.push_back(p->name);
    } else if (is_head) {
      if (strict_head)
        throw std::runtime_error("head group '" + p->name + "' mismatches checkpoint " +
                                 weights_path + " (strict_head)");
      report.skipped.push_back(p->name);
      reinit_needed = true;
    } else {
      throw std::runtime_error("trunk group '" + p->name + "' mismatches checkpoint " +
                               weights_path);
    }
  }
  if (reinit_needed) {
    Rng rng(reinit_seed, "head-reinit");
    model.reinit_head(rng);
  }
  return report;
}

}  // namespace octa
