#include "vabal/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "vabal/error.hpp"

namespace vabal {

void save_manifest(const std::string& path,
                   const std::vector<std::pair<std::string, Tensor*>>& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, tensor] : params) {
    j[name] = {{"shape", tensor->shape}, {"data", tensor->data}};
  }
  std::ofstream out(path);
  if (!out) throw Error("save_manifest: cannot open " + path + " for writing");
  out << j.dump();
}

void load_manifest(const std::string& path,
                   const std::vector<std::pair<std::string, Tensor*>>& params) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_manifest: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("load_manifest: " + path + ": " + e.what());
  }
  for (const auto& [name, tensor] : params) {
    if (!j.contains(name))
      throw ParseError("load_manifest: missing parameter '" + name + "' in " + path);
    const auto shape = j[name].at("shape").get<std::vector<std::size_t>>();
    if (shape != tensor->shape)
      throw ShapeError("load_manifest: parameter '" + name + "' has shape " + shape_str(shape) +
                       ", expected " + shape_str(tensor->shape));
    tensor->data = j[name].at("data").get<std::vector<double>>();
    if (tensor->data.size() != shape_numel(shape))
      throw ParseError("load_manifest: parameter '" + name + "' has wrong element count");
  }
}

}  // namespace vabal
