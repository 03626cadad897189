#include "kevo/executor.hpp"

namespace kevo {
namespace {

// Linear accepts a C x 1 x 1 predecessor; flatten to N x C.
Tensor as_rows(const Tensor& t) {
  if (t.shape.size() == 2) return t;
  if (t.shape.size() == 4 && t.shape[2] == 1 && t.shape[3] == 1) {
    Tensor v = t;
    v.shape = {t.shape[0], t.shape[1]};
    return v;
  }
  throw DimensionError("linear input must be flat, got " + t.shape_str());
}

}  // namespace

Tensor forward(const NetworkGraph& g, ParamSet& params, const Tensor& x,
               RunMode mode, ForwardTrace* trace) {
  const LayerNode& in = g.input_node();
  require_shape(x, {x.shape.empty() ? 0 : x.shape[0], in.c, in.h, in.w},
                "forward input");
  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  tr.acts.clear();
  tr.bn_aux.clear();
  tr.pool_argmax.clear();

  const bool train = mode == RunMode::Train;
  for (const auto& n : g.nodes) {
    Tensor out;
    switch (n.kind) {
      case LayerKind::Input:
        out = x;
        break;
      case LayerKind::Conv: {
        const Tensor& w = params.at(n.name + "/weight");
        const Tensor* b =
            n.bias ? &params.at(n.name + "/bias") : nullptr;
        out = ops::conv2d_forward(tr.acts.at(n.preds[0]), w, b, n.stride,
                                  n.pad);
        break;
      }
      case LayerKind::BatchNorm: {
        ops::BnParams<float> p{&params.at(n.name + "/scale"),
                               &params.at(n.name + "/shift"),
                               &params.at(n.name + "/running_mean"),
                               &params.at(n.name + "/running_var")};
        out = ops::batchnorm_forward(tr.acts.at(n.preds[0]), p, train, kBnEps,
                                     kBnStatMomentum,
                                     train ? &tr.bn_aux[n.name] : nullptr);
        break;
      }
      case LayerKind::Linear: {
        const Tensor& w = params.at(n.name + "/weight");
        const Tensor* b = n.bias ? &params.at(n.name + "/bias") : nullptr;
        out = ops::linear_forward(as_rows(tr.acts.at(n.preds[0])), w, b);
        break;
      }
      case LayerKind::ReLU:
        out = ops::relu_forward(tr.acts.at(n.preds[0]));
        break;
      case LayerKind::Gap:
        out = ops::gap_forward(tr.acts.at(n.preds[0]));
        break;
      case LayerKind::Add: {
        std::vector<const Tensor*> xs;
        for (const auto& p : n.preds) xs.push_back(&tr.acts.at(p));
        out = ops::add_forward(xs);
        break;
      }
      case LayerKind::Concat: {
        std::vector<const Tensor*> xs;
        for (const auto& p : n.preds) xs.push_back(&tr.acts.at(p));
        out = ops::concat_forward(xs);
        break;
      }
      case LayerKind::MaxPool:
        out = ops::maxpool_forward(tr.acts.at(n.preds[0]), n.k, n.stride,
                                   n.pad, train ? &tr.pool_argmax[n.name]
                                                : nullptr);
        break;
    }
    tr.acts[n.name] = std::move(out);
  }
  return tr.acts.at(g.output);
}

GradMap backward(const NetworkGraph& g, const ParamSet& params,
                 const ForwardTrace& trace, const Tensor& x,
                 const Tensor& dout) {
  GradMap grads;
  std::map<std::string, Tensor> act_grad;
  auto accumulate = [&](const std::string& name, Tensor&& delta) {
    auto it = act_grad.find(name);
    if (it == act_grad.end()) {
      act_grad.emplace(name, std::move(delta));
    } else {
      if (it->second.shape != delta.shape)
        throw DimensionError("backward: gradient shape mismatch at '" + name +
                             "'");
      for (std::size_t i = 0; i < delta.numel(); ++i)
        it->second.data[i] += delta.data[i];
    }
  };

  {
    Tensor d = dout;
    const Tensor& out_act = trace.acts.at(g.output);
    if (d.shape != out_act.shape)
      throw DimensionError("backward: dout shape " + d.shape_str() +
                           " != output " + out_act.shape_str());
    act_grad.emplace(g.output, std::move(d));
  }

  for (auto it = g.nodes.rbegin(); it != g.nodes.rend(); ++it) {
    const LayerNode& n = *it;
    auto gi = act_grad.find(n.name);
    if (gi == act_grad.end()) continue;  // node does not feed the output
    const Tensor& gy = gi->second;
    switch (n.kind) {
      case LayerKind::Input:
        break;
      case LayerKind::Conv: {
        const Tensor& xin = trace.acts.at(n.preds[0]);
        const Tensor& w = params.at(n.name + "/weight");
        Tensor gx, gw, gb;
        ops::conv2d_backward(xin, w, n.stride, n.pad, gy, &gx, gw,
                             n.bias ? &gb : nullptr);
        grads[n.name + "/weight"] = std::move(gw.data);
        if (n.bias) grads[n.name + "/bias"] = std::move(gb.data);
        accumulate(n.preds[0], std::move(gx));
        break;
      }
      case LayerKind::BatchNorm: {
        const Tensor& xin = trace.acts.at(n.preds[0]);
        auto aux = trace.bn_aux.find(n.name);
        if (aux == trace.bn_aux.end())
          throw NumericError("backward: bn '" + n.name +
                             "' has no saved batch statistics (eval trace?)");
        ops::BnParams<float> p{
            const_cast<Tensor*>(&params.at(n.name + "/scale")),
            const_cast<Tensor*>(&params.at(n.name + "/shift")),
            const_cast<Tensor*>(&params.at(n.name + "/running_mean")),
            const_cast<Tensor*>(&params.at(n.name + "/running_var"))};
        Tensor gx, gscale, gshift;
        ops::batchnorm_backward(xin, p, aux->second, kBnEps, gy, gx, gscale,
                                gshift);
        grads[n.name + "/scale"] = std::move(gscale.data);
        grads[n.name + "/shift"] = std::move(gshift.data);
        accumulate(n.preds[0], std::move(gx));
        break;
      }
      case LayerKind::Linear: {
        const Tensor& raw = trace.acts.at(n.preds[0]);
        const Tensor xin = as_rows(raw);
        const Tensor& w = params.at(n.name + "/weight");
        Tensor gx, gw, gb;
        ops::linear_backward(xin, w, gy, &gx, gw, n.bias ? &gb : nullptr);
        grads[n.name + "/weight"] = std::move(gw.data);
        if (n.bias) grads[n.name + "/bias"] = std::move(gb.data);
        gx.shape = raw.shape;  // undo the flatten
        accumulate(n.preds[0], std::move(gx));
        break;
      }
      case LayerKind::ReLU:
        accumulate(n.preds[0],
                   ops::relu_backward(trace.acts.at(n.preds[0]), gy));
        break;
      case LayerKind::Gap:
        accumulate(n.preds[0],
                   ops::gap_backward(trace.acts.at(n.preds[0]), gy));
        break;
      case LayerKind::Add:
        for (const auto& p : n.preds) {
          Tensor d = gy;
          accumulate(p, std::move(d));
        }
        break;
      case LayerKind::Concat: {
        std::vector<const Tensor*> xs;
        for (const auto& p : n.preds) xs.push_back(&trace.acts.at(p));
        auto parts = ops::concat_backward(xs, gy);
        for (std::size_t i = 0; i < n.preds.size(); ++i)
          accumulate(n.preds[i], std::move(parts[i]));
        break;
      }
      case LayerKind::MaxPool: {
        auto am = trace.pool_argmax.find(n.name);
        if (am == trace.pool_argmax.end())
          throw NumericError("backward: maxpool '" + n.name +
                             "' has no saved argmax (eval trace?)");
        accumulate(n.preds[0], ops::maxpool_backward(
                                   trace.acts.at(n.preds[0]), am->second, gy));
        break;
      }
    }
  }
  return grads;
}

}  // namespace kevo
