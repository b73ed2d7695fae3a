#include "jsrl/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jsrl {
namespace {

void write_value(std::ostream& os, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::runtime_error(path + ": " + msg);
}

}  // namespace

void save_net(const DenseNet& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(path, "cannot open for writing");
  os << "densenet 1\n";
  os << "layers " << net.layer_count();
  for (int s : net.layer_sizes) os << ' ' << s;
  os << '\n';
  os << "activation " << to_string(net.activation) << '\n';
  for (size_t l = 0; l < net.weights.size(); ++l) {
    const Mat& w = net.weights[l];
    for (size_t i = 0; i < w.data.size(); ++i) {
      write_value(os, w.data[i]);
      os << (i + 1 == w.data.size() ? '\n' : ' ');
    }
    const Vec& b = net.biases[l];
    for (size_t i = 0; i < b.size(); ++i) {
      write_value(os, b[i]);
      os << (i + 1 == b.size() ? '\n' : ' ');
    }
  }
  if (!os) fail(path, "write failed");
}

DenseNet load_net(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(path, "cannot open");
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "densenet" || version != 1)
    fail(path, "not a densenet v1 file");
  int layer_count = 0;
  if (!(is >> tag >> layer_count) || tag != "layers" || layer_count < 1)
    fail(path, "bad layer header");
  std::vector<int> sizes(static_cast<size_t>(layer_count) + 1);
  for (int& s : sizes)
    if (!(is >> s) || s <= 0) fail(path, "bad layer size");
  std::string act;
  if (!(is >> tag >> act) || tag != "activation") fail(path, "bad activation header");

  DenseNet net;
  net.layer_sizes = sizes;
  net.activation = activation_from_string(act);
  net.weights.reserve(static_cast<size_t>(layer_count));
  net.biases.reserve(static_cast<size_t>(layer_count));
  for (int l = 0; l < layer_count; ++l) {
    Mat w(sizes[static_cast<size_t>(l) + 1], sizes[static_cast<size_t>(l)]);
    for (double& v : w.data)
      if (!(is >> v)) fail(path, "truncated weights in layer " + std::to_string(l));
    Vec b(static_cast<size_t>(sizes[static_cast<size_t>(l) + 1]), 0.0);
    for (double& v : b)
      if (!(is >> v)) fail(path, "truncated biases in layer " + std::to_string(l));
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  double extra;
  if (is >> extra) fail(path, "trailing data");
  return net;
}

namespace {

std::string component_path(const std::string& dir, int agent, const char* component) {
  return dir + "/agent" + std::to_string(agent) + "_" + component + ".net";
}

void load_into(DenseNet& dst, const std::string& path) {
  DenseNet loaded = load_net(path);
  if (loaded.layer_sizes != dst.layer_sizes)
    fail(path, "layer sizes do not match the configured network");
  if (loaded.activation != dst.activation) fail(path, "activation does not match");
  dst = std::move(loaded);
}

}  // namespace

void save_bindings(const std::vector<AgentBinding>& bindings, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const AgentBinding& b : bindings) {
    save_net(b.nets.policy, component_path(dir, b.agent_id, "policy"));
    save_net(b.nets.value, component_path(dir, b.agent_id, "value"));
    save_net(b.encoder.message_net, component_path(dir, b.agent_id, "message"));
    save_net(b.encoder.update_net, component_path(dir, b.agent_id, "update"));
  }
}

void load_bindings(std::vector<AgentBinding>& bindings, const std::string& dir) {
  for (AgentBinding& b : bindings) {
    load_into(b.nets.policy, component_path(dir, b.agent_id, "policy"));
    load_into(b.nets.value, component_path(dir, b.agent_id, "value"));
    load_into(b.encoder.message_net, component_path(dir, b.agent_id, "message"));
    load_into(b.encoder.update_net, component_path(dir, b.agent_id, "update"));
  }
}

}  // namespace jsrl
