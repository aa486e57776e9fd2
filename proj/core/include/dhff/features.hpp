#pragma once

#include <array>
#include <vector>

#include "dhff/vgg.hpp"

namespace dhff {

// Channel-by-channel inner products of a feature map, normalized by
// 1/(C*M) with M the spatial element count. Symmetric by construction.
template <class T>
struct GramMatrix {
  int c = 0;
  std::vector<T> v;  // c*c row-major

  T at(int a, int b) const { return v[static_cast<std::size_t>(a) * c + b]; }
  bool empty() const { return v.empty(); }
};

template <class T>
struct ContentFeatures {
  int c = 0, h = 0, w = 0;     // shape of the source map
  std::vector<T> values;       // spanned row-major; length c*h*w
};

template <class T>
struct StyleFeatures {
  std::array<GramMatrix<T>, 5> blocks;  // pool1..pool5
};

template <class T>
GramMatrix<T> gram(const Tensor<T>& f);

// Gradient of sum_{a,b} (G(F) - target)^2 w.r.t. F:
// dL/dF[a,y,x] = 4/(C*M) * sum_b (G-target)[a,b] * F[b,y,x].
template <class T>
Tensor<T> gram_loss_grad(const Tensor<T>& f, const GramMatrix<T>& current,
                         const GramMatrix<T>& target);

template <class T>
ContentFeatures<T> content_from_cache(const ActivationCache<T>& cache,
                                      ContentLayer layer);
template <class T>
StyleFeatures<T> style_from_cache(const ActivationCache<T>& cache);

template <class T>
ContentFeatures<T> extract_content(const VggWeights& w, const Tensor<T>& img,
                                   ContentLayer layer, PoolingMode mode);
template <class T>
StyleFeatures<T> extract_style(const VggWeights& w, const Tensor<T>& img,
                               PoolingMode mode);

// Plain squared Euclidean distances, accumulated in double.
template <class T>
double content_sq_distance(const ContentFeatures<T>& a,
                           const ContentFeatures<T>& b);
template <class T>
double gram_sq_distance(const GramMatrix<T>& a, const GramMatrix<T>& b);
template <class T>
double style_sq_distance(const StyleFeatures<T>& a, const StyleFeatures<T>& b);

extern template GramMatrix<float> gram<float>(const Tensor<float>&);
extern template GramMatrix<double> gram<double>(const Tensor<double>&);
extern template Tensor<float> gram_loss_grad<float>(
    const Tensor<float>&, const GramMatrix<float>&, const GramMatrix<float>&);
extern template Tensor<double> gram_loss_grad<double>(
    const Tensor<double>&, const GramMatrix<double>&,
    const GramMatrix<double>&);
extern template ContentFeatures<float> content_from_cache<float>(
    const ActivationCache<float>&, ContentLayer);
extern template ContentFeatures<double> content_from_cache<double>(
    const ActivationCache<double>&, ContentLayer);
extern template StyleFeatures<float> style_from_cache<float>(
    const ActivationCache<float>&);
extern template StyleFeatures<double> style_from_cache<double>(
    const ActivationCache<double>&);
extern template ContentFeatures<float> extract_content<float>(
    const VggWeights&, const Tensor<float>&, ContentLayer, PoolingMode);
extern template ContentFeatures<double> extract_content<double>(
    const VggWeights&, const Tensor<double>&, ContentLayer, PoolingMode);
extern template StyleFeatures<float> extract_style<float>(
    const VggWeights&, const Tensor<float>&, PoolingMode);
extern template StyleFeatures<double> extract_style<double>(
    const VggWeights&, const Tensor<double>&, PoolingMode);
extern template double content_sq_distance<float>(
    const ContentFeatures<float>&, const ContentFeatures<float>&);
extern template double content_sq_distance<double>(
    const ContentFeatures<double>&, const ContentFeatures<double>&);
extern template double gram_sq_distance<float>(const GramMatrix<float>&,
                                               const GramMatrix<float>&);
extern template double gram_sq_distance<double>(const GramMatrix<double>&,
                                                const GramMatrix<double>&);
extern template double style_sq_distance<float>(const StyleFeatures<float>&,
                                                const StyleFeatures<float>&);
extern template double style_sq_distance<double>(const StyleFeatures<double>&,
                                                 const StyleFeatures<double>&);

}  // namespace dhff
