#pragma once

#include <span>
#include <string>
#include <vector>

#include "mibci/error.hpp"

namespace mibci {

/// Rows are true classes, columns predicted classes; ids are 1-based.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = 4) : classes_(classes), counts_(static_cast<std::size_t>(classes * classes), 0) {
    if (classes < 1) throw InvalidArgument("confusion matrix needs at least one class");
  }

  int classes() const { return classes_; }

  long long at(int truth, int predicted) const { return counts_[index(truth, predicted)]; }
  long long& at(int truth, int predicted) { return counts_[index(truth, predicted)]; }

  void add(int truth, int predicted) { ++at(truth, predicted); }

  long long total() const {
    long long t = 0;
    for (long long c : counts_) t += c;
    return t;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t index(int truth, int predicted) const {
    if (truth < 1 || truth > classes_ || predicted < 1 || predicted > classes_)
      throw InvalidArgument("class id out of range: (" + std::to_string(truth) + ", " + std::to_string(predicted) + ")");
    return static_cast<std::size_t>((truth - 1) * classes_ + (predicted - 1));
  }

  int classes_;
  std::vector<long long> counts_;
};

inline ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, int classes = 4) {
  if (y_true.size() != y_pred.size()) throw InvalidArgument("label sequences differ in length");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_true[i], y_pred[i]);
  return cm;
}

/// Percentages. Precision, recall and F1 are macro averages over every class of
/// the matrix; a 0/0 ratio counts as 0.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
};

inline Metrics metrics(const ConfusionMatrix& cm) {
  const int C = cm.classes();
  const double n = static_cast<double>(cm.total());
  if (n == 0.0) throw InvalidArgument("metrics of an empty confusion matrix");
  std::vector<double> row(static_cast<std::size_t>(C), 0.0), col(row);
  double diag = 0.0;
  for (int t = 1; t <= C; ++t)
    for (int p = 1; p <= C; ++p) {
      const double v = static_cast<double>(cm.at(t, p));
      row[static_cast<std::size_t>(t - 1)] += v;
      col[static_cast<std::size_t>(p - 1)] += v;
      if (t == p) diag += v;
    }
  Metrics m;
  double pe = 0.0;
  for (int c = 1; c <= C; ++c) {
    const auto k = static_cast<std::size_t>(c - 1);
    const double tp = static_cast<double>(cm.at(c, c));
    const double prec = col[k] > 0 ? tp / col[k] : 0.0;
    const double rec = row[k] > 0 ? tp / row[k] : 0.0;
    m.precision += prec;
    m.recall += rec;
    m.f1 += prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    pe += row[k] * col[k];
  }
  pe /= n * n;
  const double po = diag / n;
  if (pe >= 1.0) throw NumericalError("kappa undefined: expected agreement is 1");
  m.accuracy = 100.0 * po;
  m.precision *= 100.0 / C;
  m.recall *= 100.0 / C;
  m.f1 *= 100.0 / C;
  m.kappa = 100.0 * (po - pe) / (1.0 - pe);
  return m;
}

}  // namespace mibci
