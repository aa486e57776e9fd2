#include "dhff/features.hpp"

#include <stdexcept>

namespace dhff {

template <class T>
GramMatrix<T> gram(const Tensor<T>& f) {
  GramMatrix<T> g;
  g.c = f.c;
  g.v.assign(std::size_t(f.c) * f.c, T(0));
  const std::size_t m = f.plane_size();
  const double norm = 1.0 / (double(f.c) * double(m));
#pragma omp parallel for schedule(static)
  for (int a = 0; a < f.c; ++a) {
    const T* fa = f.plane(a);
    for (int b = a; b < f.c; ++b) {
      const T* fb = f.plane(b);
      double s = 0.0;
      for (std::size_t p = 0; p < m; ++p) s += double(fa[p]) * double(fb[p]);
      const T v = static_cast<T>(s * norm);
      g.v[std::size_t(a) * f.c + b] = v;
      g.v[std::size_t(b) * f.c + a] = v;
    }
  }
  return g;
}

template <class T>
Tensor<T> gram_loss_grad(const Tensor<T>& f, const GramMatrix<T>& current,
                         const GramMatrix<T>& target) {
  if (current.c != f.c || target.c != f.c)
    throw std::invalid_argument("gram_loss_grad: channel mismatch");
  const std::size_t m = f.plane_size();
  const double scale = 4.0 / (double(f.c) * double(m));
  Tensor<T> grad(f.c, f.h, f.w);
#pragma omp parallel for schedule(static)
  for (int a = 0; a < f.c; ++a) {
    T* ga = grad.plane(a);
    for (int b = 0; b < f.c; ++b) {
      const double d =
          scale * (double(current.at(a, b)) - double(target.at(a, b)));
      const T db = static_cast<T>(d);
      const T* fb = f.plane(b);
      for (std::size_t p = 0; p < m; ++p) ga[p] += db * fb[p];
    }
  }
  return grad;
}

template <class T>
ContentFeatures<T> content_from_cache(const ActivationCache<T>& cache,
                                      ContentLayer layer) {
  const Tensor<T>& map = cache.conv_out[content_layer_index(layer) - 1];
  ContentFeatures<T> c;
  c.c = map.c;
  c.h = map.h;
  c.w = map.w;
  c.values = map.v;
  return c;
}

template <class T>
StyleFeatures<T> style_from_cache(const ActivationCache<T>& cache) {
  StyleFeatures<T> s;
  for (int i = 0; i < 5; ++i) s.blocks[i] = gram(cache.pool_out[i]);
  return s;
}

template <class T>
ContentFeatures<T> extract_content(const VggWeights& w, const Tensor<T>& img,
                                   ContentLayer layer, PoolingMode mode) {
  return content_from_cache(vgg_forward(w, img, mode), layer);
}

template <class T>
StyleFeatures<T> extract_style(const VggWeights& w, const Tensor<T>& img,
                               PoolingMode mode) {
  return style_from_cache(vgg_forward(w, img, mode));
}

template <class T>
double content_sq_distance(const ContentFeatures<T>& a,
                           const ContentFeatures<T>& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("content_sq_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = double(a.values[i]) - double(b.values[i]);
    s += d * d;
  }
  return s;
}

template <class T>
double gram_sq_distance(const GramMatrix<T>& a, const GramMatrix<T>& b) {
  if (a.c != b.c)
    throw std::invalid_argument("gram_sq_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double d = double(a.v[i]) - double(b.v[i]);
    s += d * d;
  }
  return s;
}

template <class T>
double style_sq_distance(const StyleFeatures<T>& a,
                         const StyleFeatures<T>& b) {
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += gram_sq_distance(a.blocks[i], b.blocks[i]);
  return s;
}

template GramMatrix<float> gram<float>(const Tensor<float>&);
template GramMatrix<double> gram<double>(const Tensor<double>&);
template Tensor<float> gram_loss_grad<float>(const Tensor<float>&,
                                             const GramMatrix<float>&,
                                             const GramMatrix<float>&);
template Tensor<double> gram_loss_grad<double>(const Tensor<double>&,
                                               const GramMatrix<double>&,
                                               const GramMatrix<double>&);
template ContentFeatures<float> content_from_cache<float>(
    const ActivationCache<float>&, ContentLayer);
template ContentFeatures<double> content_from_cache<double>(
    const ActivationCache<double>&, ContentLayer);
template StyleFeatures<float> style_from_cache<float>(
    const ActivationCache<float>&);
template StyleFeatures<double> style_from_cache<double>(
    const ActivationCache<double>&);
template ContentFeatures<float> extract_content<float>(const VggWeights&,
                                                       const Tensor<float>&,
                                                       ContentLayer,
                                                       PoolingMode);
template ContentFeatures<double> extract_content<double>(
    const VggWeights&, const Tensor<double>&, ContentLayer, PoolingMode);
template StyleFeatures<float> extract_style<float>(const VggWeights&,
                                                   const Tensor<float>&,
                                                   PoolingMode);
template StyleFeatures<double> extract_style<double>(const VggWeights&,
                                                     const Tensor<double>&,
                                                     PoolingMode);
template double content_sq_distance<float>(const ContentFeatures<float>&,
                                           const ContentFeatures<float>&);
template double content_sq_distance<double>(const ContentFeatures<double>&,
                                            const ContentFeatures<double>&);
template double gram_sq_distance<float>(const GramMatrix<float>&,
                                        const GramMatrix<float>&);
template double gram_sq_distance<double>(const GramMatrix<double>&,
                                         const GramMatrix<double>&);
template double style_sq_distance<float>(const StyleFeatures<float>&,
                                         const StyleFeatures<float>&);
template double style_sq_distance<double>(const StyleFeatures<double>&,
                                          const StyleFeatures<double>&);

}  // namespace dhff
