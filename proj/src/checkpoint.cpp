#include "ppjudge/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "ppjudge/error.hpp"

namespace ppjudge {

namespace {

constexpr char kMagic[4] = {'P', 'P', 'J', 'C'};
constexpr std::uint32_t kVersion = 1;

struct Entry {
  Shape shape;
  std::vector<double> data;
};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_entries(const std::string& path, const std::map<std::string, Entry>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u64(os, entries.size());
  for (const auto& [name, e] : entries) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t d : e.shape) write_u64(os, d);
    os.write(reinterpret_cast<const char*>(e.data.data()),
             static_cast<std::streamsize>(e.data.size() * sizeof(double)));
  }
  if (!os) throw IoError("failed writing checkpoint: " + path);
}

std::map<std::string, Entry> read_entries(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("not a checkpoint file: " + path);
  }
  std::uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t count = read_u64(is);
  std::map<std::string, Entry> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t name_len = read_u32(is);
    if (!is || name_len > (1u << 20)) throw ParseError("corrupt checkpoint entry name");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    std::uint32_t rank = read_u32(is);
    if (!is || rank > 8) throw ParseError("corrupt checkpoint entry rank");
    Entry e;
    e.shape.resize(rank);
    for (std::uint32_t r = 0; r < rank; ++r) e.shape[r] = read_u64(is);
    std::size_t numel = shape_numel(e.shape);
    e.data.resize(numel);
    is.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(numel * sizeof(double)));
    if (!is) throw ParseError("truncated checkpoint: " + path);
    entries.emplace(std::move(name), std::move(e));
  }
  return entries;
}

const std::string kOptMeta = "opt/meta";

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const OptimizerState* opt) {
  std::map<std::string, Entry> entries;
  for (const auto& p : params.all()) {
    entries[p.name] = Entry{p.tensor.shape(), p.tensor.values()};
  }
  if (opt) {
    entries[kOptMeta] = Entry{{7},
                              {static_cast<double>(opt->step),
                               opt->kind == OptimKind::adamw ? 0.0 : 1.0, opt->lr,
                               opt->beta1, opt->beta2, opt->eps, opt->weight_decay}};
    for (const auto& [name, m] : opt->m) entries["opt/m/" + name] = Entry{{m.size()}, m};
    for (const auto& [name, v] : opt->v) entries["opt/v/" + name] = Entry{{v.size()}, v};
  }
  write_entries(path, entries);
}

void load_checkpoint(const std::string& path, ParamStore& params, OptimizerState* opt) {
  auto entries = read_entries(path);
  for (const auto& p : params.all()) {
    auto it = entries.find(p.name);
    if (it == entries.end()) {
      throw ContractError("checkpoint is missing parameter '" + p.name + "'");
    }
    if (it->second.shape != p.tensor.shape()) {
      throw ContractError("checkpoint shape mismatch for '" + p.name + "': file has " +
                          shape_str(it->second.shape) + ", model has " +
                          shape_str(p.tensor.shape()));
    }
    Tensor handle = p.tensor;
    handle.values_mut() = it->second.data;
  }
  // Reject stray tensor entries so a wrong-model checkpoint fails loudly.
  for (const auto& [name, e] : entries) {
    if (name.rfind("opt/", 0) == 0) continue;
    if (!params.contains(name)) {
      throw ContractError("checkpoint contains unknown parameter '" + name + "'");
    }
  }
  if (opt) {
    auto mit = entries.find(kOptMeta);
    if (mit == entries.end()) {
      throw ContractError("checkpoint has no optimizer state: " + path);
    }
    const auto& meta = mit->second.data;
    if (meta.size() != 7) throw ParseError("corrupt optimizer metadata");
    opt->step = static_cast<std::uint64_t>(meta[0]);
    opt->kind = meta[1] == 0.0 ? OptimKind::adamw : OptimKind::adam;
    opt->lr = meta[2];
    opt->beta1 = meta[3];
    opt->beta2 = meta[4];
    opt->eps = meta[5];
    opt->weight_decay = meta[6];
    opt->m.clear();
    opt->v.clear();
    for (const auto& [name, e] : entries) {
      if (name.rfind("opt/m/", 0) == 0) opt->m[name.substr(6)] = e.data;
      if (name.rfind("opt/v/", 0) == 0) opt->v[name.substr(6)] = e.data;
    }
  }
}

}  // namespace ppjudge
