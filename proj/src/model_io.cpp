#include "sepcov/model_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

namespace sepcov {

double parse_decimal(const std::string& text) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
  if (first < last && *first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw DomainError("not a decimal number: '" + text + "'");
  }
  return value;
}

namespace {

double number_of(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_decimal(v.get<std::string>());
  throw DomainError("expected a number or decimal string, got " + v.dump());
}

std::vector<Atom> atoms_of(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw DomainError(std::string("model document needs an array '") + key + "'");
  }
  std::vector<Atom> atoms;
  for (const auto& pair : doc[key]) {
    if (!pair.is_array() || pair.size() != 2) {
      throw DomainError(std::string("each entry of '") + key +
                        "' must be [value, weight]");
    }
    atoms.push_back({number_of(pair[0]), number_of(pair[1])});
  }
  return atoms;
}

long dim_of(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw DomainError(std::string("model document needs '") + key + "'");
  }
  const double v = number_of(doc[key]);
  if (v != std::floor(v) || v < 1) {
    throw DomainError(std::string("'") + key + "' must be a positive integer");
  }
  return static_cast<long>(v);
}

nlohmann::json atoms_to_json(const AtomicMeasure& m) {
  auto arr = nlohmann::json::array();
  for (const Atom& a : m.atoms()) arr.push_back({a.value, a.weight});
  return arr;
}

}  // namespace

SpectralModel model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw DomainError("model document must be a JSON object");
  return build_model(atoms_of(doc, "atoms_a"), atoms_of(doc, "atoms_b"),
                     dim_of(doc, "n"), dim_of(doc, "N"));
}

nlohmann::json model_to_json(const SpectralModel& model, bool include_meta) {
  nlohmann::json doc;
  doc["n"] = model.n;
  doc["N"] = model.big_n;
  doc["atoms_a"] = atoms_to_json(model.pi_a);
  doc["atoms_b"] = atoms_to_json(model.pi_b);
  if (include_meta) {
    doc["swapped"] = model.swapped;
    doc["hash"] = model.hash();
  }
  return doc;
}

SpectralModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open model file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("invalid JSON in model file " + path.string() + ": " + e.what());
  }
  try {
    return model_from_json(doc);
  } catch (const DomainError& e) {
    throw DomainError("invalid model file " + path.string() + ": " + e.what());
  }
}

void save_model(const SpectralModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write model file " + path.string());
  out << model_to_json(model).dump(2) << '\n';
}

}  // namespace sepcov
