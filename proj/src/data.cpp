#include "ppjudge/data.hpp"

#include <fstream>
#include <json.hpp>

#include "ppjudge/error.hpp"

namespace ppjudge {

using nlohmann::json;

const std::array<std::string, AttributeScores::kCount>& AttributeScores::names() {
  static const std::array<std::string, kCount> n = {
      "consistency",        "style_stability",  "color_stability",
      "composition_stability", "process_stability", "detail_depth",
      "color_depth",        "composition_depth"};
  return n;
}

std::array<double, AttributeScores::kCount> AttributeScores::as_array() const {
  return {consistency,        style_stability,   color_stability,
          composition_stability, process_stability, detail_depth,
          color_depth,        composition_depth};
}

AttributeScores AttributeScores::from_array(const std::array<double, kCount>& v) {
  AttributeScores s;
  s.consistency = v[0];
  s.style_stability = v[1];
  s.color_stability = v[2];
  s.composition_stability = v[3];
  s.process_stability = v[4];
  s.detail_depth = v[5];
  s.color_depth = v[6];
  s.composition_depth = v[7];
  return s;
}

Tensor AttributeScores::tensor() const {
  auto a = as_array();
  return Tensor::from_values({kCount}, std::vector<double>(a.begin(), a.end()));
}

void AttributeScores::validate() const {
  auto a = as_array();
  for (std::size_t i = 0; i < kCount; ++i) {
    if (!(a[i] >= 1.0 && a[i] <= 10.0)) {
      throw RangeError("score " + names()[i] + " = " + std::to_string(a[i]) +
                       " outside [1,10]");
    }
  }
}

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }
std::string to_string(Source s) { return s == Source::real ? "real" : "synthetic"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ParseError("unknown split '" + s + "'");
}

Source source_from_string(const std::string& s) {
  if (s == "real") return Source::real;
  if (s == "synthetic") return Source::synthetic;
  throw ParseError("unknown source '" + s + "'");
}

std::string parent_dir(const std::string& path) {
  auto pos = path.find_last_of('/');
  if (pos == std::string::npos) return ".";
  if (pos == 0) return "/";
  return path.substr(0, pos);
}

std::string join_path(const std::string& dir, const std::string& rel) {
  if (rel.empty()) return dir;
  if (rel[0] == '/') return rel;  // already absolute
  if (dir.empty() || dir == ".") return rel;
  if (dir.back() == '/') return dir + rel;
  return dir + "/" + rel;
}

namespace {

json reference_to_json(const SampleReference& ref) {
  json j;
  if (ref.is_prompt) {
    j["type"] = "prompt";
    j["text"] = ref.prompt;
  } else {
    j["type"] = "image";
    j["path"] = ref.image_path;
  }
  return j;
}

SampleReference reference_from_json(const json& j) {
  SampleReference ref;
  std::string type = j.at("type").get<std::string>();
  if (type == "prompt") {
    ref.is_prompt = true;
    ref.prompt = j.at("text").get<std::string>();
  } else if (type == "image") {
    ref.is_prompt = false;
    ref.image_path = j.at("path").get<std::string>();
  } else {
    throw ParseError("reference.type must be 'image' or 'prompt', got '" + type + "'");
  }
  return ref;
}

}  // namespace

void save_manifest(const std::string& path, const std::vector<ProcessSample>& samples) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write manifest: " + path);
  for (const ProcessSample& s : samples) {
    s.scores.validate();
    json j;
    j["id"] = s.id;
    j["reference"] = reference_to_json(s.reference);
    j["frames"] = s.frame_paths;
    json scores;
    auto vals = s.scores.as_array();
    for (std::size_t i = 0; i < AttributeScores::kCount; ++i) {
      scores[AttributeScores::names()[i]] = vals[i];
    }
    j["scores"] = scores;
    j["split"] = to_string(s.split);
    j["source"] = to_string(s.source);
    os << j.dump() << "\n";
  }
  if (!os) throw IoError("failed writing manifest: " + path);
}

std::vector<ProcessSample> load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read manifest: " + path);
  std::vector<ProcessSample> out;
  std::string line;
  std::size_t record = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      ProcessSample s;
      s.id = j.at("id").get<std::string>();
      s.reference = reference_from_json(j.at("reference"));
      s.frame_paths = j.at("frames").get<std::vector<std::string>>();
      if (s.frame_paths.empty()) throw ParseError("frames must be nonempty");
      const json& scores = j.at("scores");
      std::array<double, AttributeScores::kCount> vals{};
      for (std::size_t i = 0; i < AttributeScores::kCount; ++i) {
        const std::string& name = AttributeScores::names()[i];
        if (!scores.contains(name)) throw ParseError("missing scores." + name);
        vals[i] = scores.at(name).get<double>();
        if (!(vals[i] >= 1.0 && vals[i] <= 10.0)) {
          throw ParseError("scores." + name + " = " + std::to_string(vals[i]) +
                           " outside [1,10]");
        }
      }
      s.scores = AttributeScores::from_array(vals);
      s.split = split_from_string(j.at("split").get<std::string>());
      s.source = source_from_string(j.at("source").get<std::string>());
      out.push_back(std::move(s));
    } catch (const ParseError& e) {
      throw ParseError("manifest record " + std::to_string(record) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError("manifest record " + std::to_string(record) + ": " + e.what());
    }
    ++record;
  }
  return out;
}

}  // namespace ppjudge
