#include <fstream>
#include <sstream>

#include "kevo/graph.hpp"

namespace kevo {

// Graph description schema (one node per line, '#' comments):
//
//   kevo-graph v1
//   input  <name> c=<C> h=<H> w=<W>
//   conv   <name> pred=<p> co=<Co> ci=<Ci> k=<K> stride=<S> pad=<P> [bias=0|1]
//   bn     <name> pred=<p> c=<C>
//   linear <name> pred=<p> co=<Co> ci=<Ci> [bias=0|1]
//   relu   <name> pred=<p>
//   gap    <name> pred=<p>
//   maxpool <name> pred=<p> k=<K> stride=<S> pad=<P>
//   add    <name> preds=<p1,p2,...>
//   concat <name> preds=<p1,p2,...>
//   output <name>

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct KvArgs {
  std::map<std::string, std::string> kv;
  std::size_t num(const std::string& key, const std::string& node) const {
    auto it = kv.find(key);
    if (it == kv.end())
      throw ConfigError("graph file: node '" + node + "' missing key '" + key +
                        "'");
    return static_cast<std::size_t>(std::stoull(it->second));
  }
  std::size_t num_or(const std::string& key, std::size_t dflt) const {
    auto it = kv.find(key);
    return it == kv.end() ? dflt
                          : static_cast<std::size_t>(std::stoull(it->second));
  }
  std::string str(const std::string& key, const std::string& node) const {
    auto it = kv.find(key);
    if (it == kv.end())
      throw ConfigError("graph file: node '" + node + "' missing key '" + key +
                        "'");
    return it->second;
  }
};

}  // namespace

NetworkGraph parse_graph_text(const std::string& text) {
  NetworkGraph g;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (!header_seen) {
      std::string ver;
      if (tok != "kevo-graph" || !(ls >> ver) || ver != "v1")
        throw ConfigError("graph file: expected header 'kevo-graph v1'");
      header_seen = true;
      continue;
    }
    if (tok == "output") {
      if (!(ls >> g.output))
        throw ConfigError("graph file: output line needs a node name");
      continue;
    }
    LayerNode n;
    if (!(ls >> n.name))
      throw ConfigError("graph file: node line missing a name");
    KvArgs args;
    std::string kvtok;
    while (ls >> kvtok) {
      const auto eq = kvtok.find('=');
      if (eq == std::string::npos)
        throw ConfigError("graph file: bad token '" + kvtok + "' on node '" +
                          n.name + "'");
      args.kv[kvtok.substr(0, eq)] = kvtok.substr(eq + 1);
    }
    if (tok == "input") {
      n.kind = LayerKind::Input;
      n.c = args.num("c", n.name);
      n.h = args.num("h", n.name);
      n.w = args.num("w", n.name);
    } else if (tok == "conv") {
      n.kind = LayerKind::Conv;
      n.preds = {args.str("pred", n.name)};
      n.co = args.num("co", n.name);
      n.ci = args.num("ci", n.name);
      n.k = args.num("k", n.name);
      n.stride = args.num_or("stride", 1);
      n.pad = args.num_or("pad", 0);
      n.bias = args.num_or("bias", 0) != 0;
    } else if (tok == "bn") {
      n.kind = LayerKind::BatchNorm;
      n.preds = {args.str("pred", n.name)};
      n.c = args.num("c", n.name);
    } else if (tok == "linear") {
      n.kind = LayerKind::Linear;
      n.preds = {args.str("pred", n.name)};
      n.co = args.num("co", n.name);
      n.ci = args.num("ci", n.name);
      n.bias = args.num_or("bias", 1) != 0;
    } else if (tok == "relu") {
      n.kind = LayerKind::ReLU;
      n.preds = {args.str("pred", n.name)};
    } else if (tok == "gap") {
      n.kind = LayerKind::Gap;
      n.preds = {args.str("pred", n.name)};
    } else if (tok == "maxpool") {
      n.kind = LayerKind::MaxPool;
      n.preds = {args.str("pred", n.name)};
      n.k = args.num("k", n.name);
      n.stride = args.num_or("stride", 1);
      n.pad = args.num_or("pad", 0);
    } else if (tok == "add" || tok == "concat") {
      n.kind = tok == "add" ? LayerKind::Add : LayerKind::Concat;
      n.preds = split(args.str("preds", n.name), ',');
    } else {
      throw ConfigError("graph file: unknown node kind '" + tok + "'");
    }
    g.nodes.push_back(std::move(n));
  }
  if (!header_seen) throw ConfigError("graph file: missing header");
  if (g.output.empty() && !g.nodes.empty()) g.output = g.nodes.back().name;
  validate_and_shape(g);
  return g;
}

std::string graph_to_text(const NetworkGraph& g) {
  std::ostringstream os;
  os << "kevo-graph v1\n";
  for (const auto& n : g.nodes) {
    switch (n.kind) {
      case LayerKind::Input:
        os << "input " << n.name << " c=" << n.c << " h=" << n.h
           << " w=" << n.w << '\n';
        break;
      case LayerKind::Conv:
        os << "conv " << n.name << " pred=" << n.preds[0] << " co=" << n.co
           << " ci=" << n.ci << " k=" << n.k << " stride=" << n.stride
           << " pad=" << n.pad << " bias=" << (n.bias ? 1 : 0) << '\n';
        break;
      case LayerKind::BatchNorm:
        os << "bn " << n.name << " pred=" << n.preds[0] << " c=" << n.c
           << '\n';
        break;
      case LayerKind::Linear:
        os << "linear " << n.name << " pred=" << n.preds[0] << " co=" << n.co
           << " ci=" << n.ci << " bias=" << (n.bias ? 1 : 0) << '\n';
        break;
      case LayerKind::ReLU:
        os << "relu " << n.name << " pred=" << n.preds[0] << '\n';
        break;
      case LayerKind::Gap:
        os << "gap " << n.name << " pred=" << n.preds[0] << '\n';
        break;
      case LayerKind::MaxPool:
        os << "maxpool " << n.name << " pred=" << n.preds[0] << " k=" << n.k
           << " stride=" << n.stride << " pad=" << n.pad << '\n';
        break;
      case LayerKind::Add:
      case LayerKind::Concat: {
        os << (n.kind == LayerKind::Add ? "add " : "concat ") << n.name
           << " preds=";
        for (std::size_t i = 0; i < n.preds.size(); ++i)
          os << (i ? "," : "") << n.preds[i];
        os << '\n';
        break;
      }
    }
  }
  os << "output " << g.output << '\n';
  return os.str();
}

NetworkGraph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("graph file: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph_text(buf.str());
}

}  // namespace kevo
