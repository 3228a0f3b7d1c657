#include "plumesr/nn/models.hpp"

#include <cmath>
#include <sstream>

#include "plumesr/error.hpp"

namespace plumesr::nn {

namespace F = torch::nn::functional;

namespace {

std::string audit_text(const std::vector<StageShape>& stages) {
    std::ostringstream os;
    for (const auto& s : stages) os << "\n  " << s.str();
    return os.str();
}

[[noreturn]] void audit_failure(const std::string& model, const std::string& stage, const std::string& why,
                                const std::vector<StageShape>& stages) {
    throw ConstructionFailure(model + " stage " + stage + ": " + why + "; stages so far:" + audit_text(stages));
}

Shape3 pooled(Shape3 s, Stride3 k, const std::string& model, const std::string& stage,
              const std::vector<StageShape>& stages) {
    if (s.z % k[0] || s.y % k[1] || s.x % k[2]) {
        audit_failure(model, stage, "shape " + s.str() + " is not divisible by the pooling window", stages);
    }
    return {s.z / k[0], s.y / k[1], s.x / k[2]};
}

Shape3 upsampled(Shape3 s, Stride3 k) { return {s.z * k[0], s.y * k[1], s.x * k[2]}; }

// libtorch takes the fan-in of a transposed conv from its output channels, so
// a narrow last layer starts with huge weights. Re-draw them with the default
// bound computed from the taps that actually reach one output voxel.
torch::nn::ConvTranspose3d fan_corrected(torch::nn::ConvTranspose3d conv, Stride3 kernel, Stride3 stride) {
    const auto in = conv->options.in_channels();
    double taps = static_cast<double>(in);
    for (int a = 0; a < 3; ++a) taps *= static_cast<double>(kernel[a]) / static_cast<double>(stride[a]);
    const double bound = 1.0 / std::sqrt(taps);
    torch::NoGradGuard ng;
    conv->weight.uniform_(-bound, bound);
    conv->bias.uniform_(-bound, bound);
    return conv;
}

torch::nn::ConvTranspose3d up_conv(std::int64_t in, std::int64_t out, Stride3 s) {
    std::vector<std::int64_t> op{s[0] - 1, s[1] - 1, s[2] - 1};
    return fan_corrected(torch::nn::ConvTranspose3d(torch::nn::ConvTranspose3dOptions(in, out, 3)
                                                        .stride(std::vector<std::int64_t>(s.begin(), s.end()))
                                                        .padding(1)
                                                        .output_padding(op)),
                         {3, 3, 3}, s);
}

}  // namespace

std::string StageShape::str() const {
    return stage + ": (" + std::to_string(channels) + ", " + std::to_string(shape.z) + ", " +
           std::to_string(shape.y) + ", " + std::to_string(shape.x) + ")";
}

ConvLstmCellImpl::ConvLstmCellImpl(std::int64_t in_channels, std::int64_t hidden) : hidden_(hidden) {
    gates_ = register_module("gates", torch::nn::Conv3d(torch::nn::Conv3dOptions(in_channels + hidden, 4 * hidden, 3).padding(1)));
}

torch::Tensor ConvLstmCellImpl::forward(const torch::Tensor& x) {
    const auto B = x.size(0);
    const auto T = x.size(1);
    auto h = torch::zeros({B, hidden_, x.size(3), x.size(4), x.size(5)}, x.options());
    auto c = torch::zeros_like(h);
    for (std::int64_t t = 0; t < T; ++t) {
        auto g = gates_(torch::cat({x.select(1, t), h}, 1)).chunk(4, 1);
        auto i = torch::sigmoid(g[0]);
        auto f = torch::sigmoid(g[1]);
        auto o = torch::sigmoid(g[2]);
        auto u = torch::tanh(g[3]);
        c = f * c + i * u;
        h = o * torch::tanh(c);
    }
    return h;
}

TemporalNetImpl::TemporalNetImpl(TemporalConfig config) : config_(config) {
    try {
        config_.validate();
    } catch (const Error& e) {
        throw ConstructionFailure(std::string("temporal model config: ") + e.what());
    }
    const auto [c1, c2, c3] = config_.channels;
    const bool lstm = config_.bottleneck == BottleneckKind::ConvLstm;
    const std::string name = "temporal";
    Shape3 s = config_.input_shape;
    audit_.push_back({"input", config_.window, s});
    const Stride3 two{2, 2, 2};
    s = pooled(s, two, name, "enc1", audit_);
    audit_.push_back({"enc1", c1, s});
    s = pooled(s, two, name, "enc2", audit_);
    audit_.push_back({"enc2", c2, s});
    s = pooled(s, two, name, "enc3", audit_);
    audit_.push_back({"enc3", c3, s});
    audit_.push_back({lstm ? "convlstm" : "bottleneck", c3, s});
    s = upsampled(s, two);
    audit_.push_back({"dec1", c2, s});
    s = upsampled(s, two);
    audit_.push_back({"dec2", c1, s});
    s = upsampled(s, two);
    audit_.push_back({"dec3", 1, s});
    if (!(s == config_.input_shape)) audit_failure(name, "dec3", "output does not match the input shape", audit_);

    auto conv = [](std::int64_t in, std::int64_t out) {
        return torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, 3).padding(1));
    };
    auto tconv = [](std::int64_t in, std::int64_t out) {
        return fan_corrected(torch::nn::ConvTranspose3d(torch::nn::ConvTranspose3dOptions(in, out, 2).stride(2)),
                             {2, 2, 2}, {2, 2, 2});
    };
    enc1_ = register_module("enc1", conv(lstm ? 1 : config_.window, c1));
    bn1_ = register_module("bn1", torch::nn::BatchNorm3d(c1));
    enc2_ = register_module("enc2", conv(c1, c2));
    bn2_ = register_module("bn2", torch::nn::BatchNorm3d(c2));
    enc3_ = register_module("enc3", conv(c2, c3));
    bn3_ = register_module("bn3", torch::nn::BatchNorm3d(c3));
    if (lstm) {
        lstm_ = register_module("convlstm", ConvLstmCell(c3, c3));
    } else {
        bottleneck_ = register_module("bottleneck", conv(c3, c3));
    }
    dec1_ = register_module("dec1", tconv(c3, c2));
    dbn1_ = register_module("dbn1", torch::nn::BatchNorm3d(c2));
    dec2_ = register_module("dec2", tconv(c2, c1));
    dbn2_ = register_module("dbn2", torch::nn::BatchNorm3d(c1));
    dec3_ = register_module("dec3", tconv(c1, 1));
    // Start the ReLU head near zero: at full scale the background cells drive
    // every output negative in the first Adam steps and the head never recovers.
    {
        torch::NoGradGuard ng;
        dec3_->weight.mul_(0.1);
        dec3_->bias.zero_();
    }
    drop_ = register_module("dropout", torch::nn::Dropout3d(torch::nn::Dropout3dOptions(config_.dropout)));
}

torch::Tensor TemporalNetImpl::encode(const torch::Tensor& x, torch::Tensor& skip1, torch::Tensor& skip2) {
    auto h = drop_(F::max_pool3d(torch::relu(bn1_(enc1_(x))), F::MaxPool3dFuncOptions(2)));
    skip1 = h;
    h = drop_(F::max_pool3d(torch::relu(bn2_(enc2_(h))), F::MaxPool3dFuncOptions(2)));
    skip2 = h;
    return drop_(F::max_pool3d(torch::relu(bn3_(enc3_(h))), F::MaxPool3dFuncOptions(2)));
}

torch::Tensor TemporalNetImpl::forward(const torch::Tensor& x) {
    const auto& s = config_.input_shape;
    if (x.dim() != 5 || x.size(1) != config_.window || x.size(2) != s.z || x.size(3) != s.y || x.size(4) != s.x) {
        std::ostringstream os;
        os << "temporal model expects (B, " << config_.window << ", " << s.z << ", " << s.y << ", " << s.x
           << "), got " << x.sizes();
        throw InvalidArgument(os.str());
    }
    torch::Tensor skip1, skip2, h;
    if (config_.bottleneck == BottleneckKind::ConvLstm) {
        const auto B = x.size(0), T = x.size(1);
        auto frames = x.reshape({B * T, 1, s.z, s.y, s.x});
        auto enc = encode(frames, skip1, skip2);
        enc = enc.reshape({B, T, enc.size(1), enc.size(2), enc.size(3), enc.size(4)});
        // Skips carry the newest frame's features.
        skip1 = skip1.reshape({B, T, skip1.size(1), skip1.size(2), skip1.size(3), skip1.size(4)}).select(1, T - 1);
        skip2 = skip2.reshape({B, T, skip2.size(1), skip2.size(2), skip2.size(3), skip2.size(4)}).select(1, T - 1);
        h = lstm_(enc);
    } else {
        h = bottleneck_(encode(x, skip1, skip2));
    }
    const bool add = config_.skip == SkipMode::Additive;
    h = torch::relu(dbn1_(dec1_(h)));
    if (add) h = h + skip2;
    h = drop_(h);
    h = torch::relu(dbn2_(dec2_(h)));
    if (add) h = h + skip1;
    h = drop_(h);
    return torch::relu(dec3_(h));
}

SRMNetImpl::SRMNetImpl(SRMConfig config) : config_(config) {
    try {
        config_.validate();
    } catch (const Error& e) {
        throw ConstructionFailure(std::string("srm config: ") + e.what());
    }
    const auto [c1, c2, c3] = config_.channels;
    const std::string name = "srm";
    Shape3 s = config_.input_shape;
    audit_.push_back({"input", 1, s});
    audit_.push_back({"enc1", c1, s});
    s = pooled(s, config_.pool[0], name, "pool1", audit_);
    const Shape3 skip_shape = s;
    audit_.push_back({"pool1", c1, s});
    audit_.push_back({"enc2", c2, s});
    s = pooled(s, config_.pool[1], name, "pool2", audit_);
    audit_.push_back({"pool2", c2, s});
    audit_.push_back({"adjust_channels", c2, skip_shape});
    s = upsampled(s, config_.up[0]);
    audit_.push_back({"dec1", c2, s});
    if (!(s == skip_shape)) {
        audit_failure(name, "dec1", "output " + s.str() + " cannot fuse with the adjusted skip " + skip_shape.str(),
                      audit_);
    }
    s = upsampled(s, config_.up[1]);
    audit_.push_back({"dec2", c1, s});
    s = upsampled(s, config_.up[2]);
    audit_.push_back({"dec3", c3, s});
    s = upsampled(s, config_.up[3]);
    audit_.push_back({"dec4", 1, s});
    if (!(s == config_.output_shape)) {
        audit_failure(name, "dec4", "output " + s.str() + " differs from the target " + config_.output_shape.str(),
                      audit_);
    }

    auto conv = [](std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t p) {
        return torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, k).padding(p));
    };
    auto pool = [](Stride3 k) {
        std::vector<std::int64_t> v(k.begin(), k.end());
        return torch::nn::MaxPool3d(torch::nn::MaxPool3dOptions(v).stride(v));
    };
    enc1_ = register_module("enc1", conv(1, c1, 3, 1));
    bn1_ = register_module("bn1", torch::nn::BatchNorm3d(c1));
    pool1_ = register_module("pool1", pool(config_.pool[0]));
    enc2_ = register_module("enc2", conv(c1, c2, 3, 1));
    bn2_ = register_module("bn2", torch::nn::BatchNorm3d(c2));
    pool2_ = register_module("pool2", pool(config_.pool[1]));
    adjust_ = register_module("adjust_channels", conv(c1, c2, 1, 0));
    bn_adj_ = register_module("bn_adjust", torch::nn::BatchNorm3d(c2));
    dec1_ = register_module("dec1", up_conv(c2, c2, config_.up[0]));
    dbn1_ = register_module("dbn1", torch::nn::BatchNorm3d(c2));
    dec2_ = register_module("dec2", up_conv(c2, c1, config_.up[1]));
    dbn2_ = register_module("dbn2", torch::nn::BatchNorm3d(c1));
    dec3_ = register_module("dec3", up_conv(c1, c3, config_.up[2]));
    dbn3_ = register_module("dbn3", torch::nn::BatchNorm3d(c3));
    dec4_ = register_module("dec4", up_conv(c3, 1, config_.up[3]));
    act_ = register_module("act", torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(config_.negative_slope)));
}

torch::Tensor SRMNetImpl::forward(const torch::Tensor& x) {
    const auto& s = config_.input_shape;
    if (x.dim() != 4 || x.size(1) != s.z || x.size(2) != s.y || x.size(3) != s.x) {
        std::ostringstream os;
        os << "srm expects (B, " << s.z << ", " << s.y << ", " << s.x << "), got " << x.sizes();
        throw InvalidArgument(os.str());
    }
    auto h = pool1_(act_(bn1_(enc1_(x.unsqueeze(1)))));
    auto skip = act_(bn_adj_(adjust_(h)));
    h = pool2_(act_(bn2_(enc2_(h))));
    h = act_(dbn1_(dec1_(h))) + skip;
    h = act_(dbn2_(dec2_(h)));
    h = act_(dbn3_(dec3_(h)));
    return act_(dec4_(h)).squeeze(1);
}

TemporalNet build_tm(const TemporalConfig& config) { return TemporalNet(config); }
TemporalNet build_hrtm(const HRTMConfig& config) { return TemporalNet(config.temporal()); }
SRMNet build_srm(const SRMConfig& config) { return SRMNet(config); }

std::int64_t count_parameters(const torch::nn::Module& module) {
    std::int64_t n = 0;
    for (const auto& p : module.parameters())
        if (p.requires_grad()) n += p.numel();
    return n;
}

torch::Tensor predict_step(TemporalNet& model, const torch::Tensor& windows) {
    torch::NoGradGuard guard;
    model->eval();
    return model->forward(windows);
}

torch::Tensor super_resolve(SRMNet& model, const torch::Tensor& frames) {
    torch::NoGradGuard guard;
    model->eval();
    if (frames.dim() == 3) return model->forward(frames.unsqueeze(0)).squeeze(0);
    return model->forward(frames);
}

void configure_threads(int threads) {
    if (threads > 0) {
        torch::set_num_threads(threads);
        try {
            torch::set_num_interop_threads(threads);
        } catch (const c10::Error&) {
            // Already fixed once parallel work has started.
        }
    }
}

}  // namespace plumesr::nn
