#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "trajnet/errors.hpp"
#include "trajnet/preprocess.hpp"
#include "trajnet/random.hpp"

using namespace trajnet;

TEST(Logit, SymmetryPoint) { EXPECT_DOUBLE_EQ(logit_transform(0.5), 0.0); }

TEST(Logit, ThreeQuarters) { EXPECT_NEAR(logit_transform(0.75), std::log(3.0), 1e-15); }

TEST(Logit, RoundTrip) { EXPECT_NEAR(inverse_logit(logit_transform(0.31)), 0.31, 1e-12); }

TEST(Logit, OutsideUnitIntervalThrows) {
  EXPECT_THROW(logit_transform(0.0), DomainError);
  EXPECT_THROW(logit_transform(1.0), DomainError);
  EXPECT_THROW(logit_transform(-0.2), DomainError);
}

TEST(Logit, StrictlyIncreasing) {
  Rng rng = make_stream(11, Stream::Test);
  for (int k = 0; k < 1000; ++k) {
    double a = uniform01(rng), b = uniform01(rng);
    if (a == b || a <= 0.0 || b <= 0.0) continue;
    if (a > b) std::swap(a, b);
    EXPECT_LT(logit_transform(a), logit_transform(b));
  }
}

TEST(BoxCox, Examples) {
  EXPECT_DOUBLE_EQ(box_cox(5.0, 1.0), 4.0);
  EXPECT_NEAR(box_cox(std::exp(1.0), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(box_cox(4.0, 0.5), 2.0, 1e-14);
}

TEST(BoxCox, NonPositiveThrows) {
  EXPECT_THROW(box_cox(0.0, 1.0), DomainError);
  EXPECT_THROW(box_cox(-1.0, 0.0), DomainError);
}

TEST(BoxCox, ContinuousAtZero) {
  for (double x : {0.3, 1.0, 2.5, 40.0}) EXPECT_NEAR(box_cox(x, 1e-9), box_cox(x, 0.0), 1e-8);
}

TEST(BoxCox, StrictlyIncreasingAndInvertible) {
  Rng rng = make_stream(12, Stream::Test);
  for (int k = 0; k < 1000; ++k) {
    const double lambda = -2.0 + 4.0 * uniform01(rng);
    double a = 0.01 + 10.0 * uniform01(rng), b = 0.01 + 10.0 * uniform01(rng);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    EXPECT_LT(box_cox(a, lambda), box_cox(b, lambda));
    EXPECT_NEAR(inverse_box_cox(box_cox(a, lambda), lambda), a, 1e-9 * a);
  }
}

TEST(BoxCox, GridSpansMinusTwoToTwo) {
  const auto g = box_cox_grid();
  ASSERT_EQ(g.size(), 41u);
  EXPECT_DOUBLE_EQ(g.front(), -2.0);
  EXPECT_DOUBLE_EQ(g.back(), 2.0);
  EXPECT_DOUBLE_EQ(g[20], 0.0);
}

// Independent argmax of the profile likelihood, written from scratch.
static double brute_profile_argmax(const std::vector<double>& x) {
  double best = 0.0, best_ll = -INFINITY;
  for (int k = -20; k <= 20; ++k) {
    const double l = k / 10.0;
    std::vector<double> y;
    double slog = 0.0;
    for (double v : x) {
      y.push_back(l == 0.0 ? std::log(v) : (std::pow(v, l) - 1.0) / l);
      slog += std::log(v);
    }
    double m = 0.0;
    for (double v : y) m += v;
    m /= y.size();
    double s2 = 0.0;
    for (double v : y) s2 += (v - m) * (v - m);
    s2 /= y.size();
    const double ll = -0.5 * y.size() * std::log(s2) + (l - 1.0) * slog;
    if (ll > best_ll) best_ll = ll, best = l;
  }
  return best;
}

TEST(FitBoxCox, GaussianColumnNearOne) {
  Rng rng = make_stream(13, Stream::Test);
  std::vector<double> x;
  for (int i = 0; i < 2000; ++i) x.push_back(5.0 + std_normal(rng));
  const double l = fit_box_cox(x);
  EXPECT_NEAR(l, 1.0, 0.35);
  EXPECT_DOUBLE_EQ(l, brute_profile_argmax(x));
}

TEST(FitBoxCox, LogNormalColumnNearZero) {
  Rng rng = make_stream(14, Stream::Test);
  std::vector<double> x;
  for (int i = 0; i < 2000; ++i) x.push_back(std::exp(std_normal(rng)));
  const double l = fit_box_cox(x);
  EXPECT_NEAR(l, 0.0, 0.15);
  EXPECT_DOUBLE_EQ(l, brute_profile_argmax(x));
}

TEST(FitBoxCox, ConstantColumnIsAnError) {
  std::vector<double> x(10, 3.0);
  EXPECT_THROW(fit_box_cox(x), DomainError);
}

TEST(FitBoxCox, SkipsMissingAndRejectsNonPositive) {
  std::vector<double> x{1.0, NAN, 2.0, 3.5};
  EXPECT_NO_THROW(fit_box_cox(x));
  x.push_back(-1.0);
  EXPECT_THROW(fit_box_cox(x), DomainError);
}

TEST(Standardize, Examples) {
  const auto z = standardize(std::vector<double>{1, 2, 3});
  EXPECT_DOUBLE_EQ(z.mean, 2.0);
  EXPECT_DOUBLE_EQ(z.sd, 1.0);
  EXPECT_DOUBLE_EQ(z.values[0], -1.0);
  EXPECT_DOUBLE_EQ(z.values[1], 0.0);
  EXPECT_DOUBLE_EQ(z.values[2], 1.0);
  EXPECT_THROW(standardize(std::vector<double>{4, 4}), DomainError);
  const auto w = standardize(std::vector<double>{1, NAN, 3});
  EXPECT_DOUBLE_EQ(w.sd, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(w.values[0], -1.0 / std::sqrt(2.0));
  EXPECT_TRUE(std::isnan(w.values[1]));
  EXPECT_DOUBLE_EQ(w.values[2], 1.0 / std::sqrt(2.0));
}

TEST(Standardize, RoundTripIdentity) {
  Rng rng = make_stream(15, Stream::Test);
  std::vector<double> x;
  for (int i = 0; i < 200; ++i) x.push_back(i % 17 == 0 ? NAN : 3.0 + 7.0 * std_normal(rng));
  const auto z = standardize(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i])) {
      EXPECT_TRUE(std::isnan(z.values[i]));
    } else {
      EXPECT_NEAR(z.values[i] * z.sd + z.mean, x[i], 1e-10);
    }
  }
}

static CovariateMatrix one_column(std::vector<double> v, bool categorical) {
  CovariateMatrix c;
  c.X = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  c.column_names = {"c"};
  c.categorical = {categorical};
  c.transforms.resize(1);
  return c;
}

TEST(ImputeCovariates, MeanFill) {
  const auto out = impute_covariates(one_column({1, NAN, 3}, false));
  EXPECT_DOUBLE_EQ(out.X(1, 0), 2.0);
}

TEST(ImputeCovariates, ModeFill) {
  // Levels A=1, B=2.
  const auto out = impute_covariates(one_column({1, 1, NAN, 2}, true));
  EXPECT_DOUBLE_EQ(out.X(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(out.X(3, 0), 2.0);
}

TEST(ImputeCovariates, ModeTieTakesSmallestLevel) {
  const auto out = impute_covariates(one_column({2, 1, NAN}, true));
  EXPECT_DOUBLE_EQ(out.X(2, 0), 1.0);
}

TEST(ImputeCovariates, ObservedColumnUnchanged) {
  const auto in = one_column({0.5, -1, 3}, false);
  EXPECT_EQ(impute_covariates(in).X, in.X);
}

TEST(ImputeCovariates, FullyMissingColumnThrows) {
  EXPECT_THROW(impute_covariates(one_column({NAN, NAN}, false)), DomainError);
}

namespace {

struct Fixture {
  testutil::TempDir dir{"prep"};
  DataPaths paths;
  Fixture(const std::string& lon, const std::string& met, const std::string& cov) {
    paths.longitudinal = dir.write("longitudinal.csv", lon);
    paths.metabolites = dir.write("metabolites.csv", met);
    paths.covariates = dir.write("covariates.csv", cov);
  }
};

const char* kLon =
    "subject_id,process,time,value\n"
    "a,zbmi,0,0.1\na,zbmi,1,0.4\na,fat,0,0.2\n"
    "b,zbmi,0,-0.3\nb,zbmi,1,\nb,fat,0,0.25\n"
    "c,zbmi,0,0.9\nc,zbmi,1,1.1\nc,fat,0,0.3\n";
const char* kMet = "subject_id,m1,m2\na,1.5,2.0\nb,2.5,\nc,0.7,3.1\n";
const char* kCov = "subject_id,sex,age\na,F,30\nb,M,\nc,F,35\n";

}  // namespace

TEST(LoadDataset, WellFormedFixture) {
  Fixture f(kLon, kMet, kCov);
  PreprocessOptions opt;
  opt.categorical_covariates = {"sex"};
  const Dataset d = load_dataset(f.paths, opt);
  EXPECT_EQ(d.N(), 3);
  EXPECT_EQ(d.longitudinal.S(), 2);
  EXPECT_EQ(d.longitudinal.p_Y(), 3);
  EXPECT_EQ(d.longitudinal.process_names[0], "zbmi");
  EXPECT_FALSE(d.longitudinal.observed(1, 1));
  EXPECT_TRUE(d.longitudinal.observed(1, 0));
  EXPECT_FALSE(d.metabolites.observed(1, 1));
  EXPECT_DOUBLE_EQ(d.covariates.X(0, 0), 1.0);  // F
  EXPECT_DOUBLE_EQ(d.covariates.X(1, 0), 2.0);  // M
  EXPECT_TRUE(std::isnan(d.covariates.X(1, 1)));
}

TEST(LoadDataset, DuplicateSubjectNamesTheId) {
  Fixture f(kLon, "subject_id,m1\na,1\na,2\n", kCov);
  PreprocessOptions o;
  o.categorical_covariates = {"sex"};
  try {
    load_dataset(f.paths, o);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(LoadDataset, NonMonotoneTimesRejected) {
  Fixture f("subject_id,process,time,value\na,z,1,0.1\na,z,0,0.2\n", kMet, kCov);
  PreprocessOptions o;
  o.categorical_covariates = {"sex"};
  try {
    load_dataset(f.paths, o);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("longitudinal.csv"), std::string::npos);
  }
}

TEST(LoadDataset, UndeclaredProcessRejected) {
  Fixture f(kLon, kMet, kCov);
  PreprocessOptions opt;
  opt.processes = {"zbmi"};
  opt.categorical_covariates = {"sex"};
  EXPECT_THROW(load_dataset(f.paths, opt), ParseError);
}

TEST(LoadDataset, SubjectWithoutCovariatesDroppedWithWarning) {
  Fixture f(kLon, kMet, "subject_id,sex,age\na,F,30\nb,,\nc,F,35\n");
  PreprocessOptions opt;
  opt.categorical_covariates = {"sex"};
  const Dataset d = load_dataset(f.paths, opt);
  EXPECT_EQ(d.N(), 2);
  EXPECT_FALSE(d.warnings.empty());
}

TEST(LoadDataset, SubjectMissingABlockKeepsFullMask) {
  Fixture f(kLon, "subject_id,m1,m2\na,1.5,2.0\nc,0.7,3.1\n", kCov);
  PreprocessOptions opt;
  opt.categorical_covariates = {"sex"};
  const Dataset d = load_dataset(f.paths, opt);
  EXPECT_EQ(d.N(), 3);
  EXPECT_FALSE(d.metabolites.observed(1, 0));
  EXPECT_FALSE(d.metabolites.observed(1, 1));
}

TEST(LoadDataset, UndeclaredStringCovariateRejected) {
  Fixture f(kLon, kMet, kCov);
  EXPECT_THROW(load_dataset(f.paths, {}), ParseError);
}

TEST(Preprocess, StandardizesAndImputes) {
  Fixture f(kLon, kMet, kCov);
  PreprocessOptions opt;
  opt.categorical_covariates = {"sex"};
  opt.logit_processes = {"fat"};
  const Dataset d = preprocess(load_dataset(f.paths, opt), opt);
  EXPECT_TRUE(d.covariates.X.allFinite());
  // Fully observed metabolite column: mean 0, sd 1.
  const Vector c = d.metabolites.M.col(0);
  EXPECT_NEAR(c.mean(), 0.0, 1e-8);
  EXPECT_NEAR(std::sqrt((c.array() - c.mean()).square().sum() / 2.0), 1.0, 1e-8);
  EXPECT_TRUE(d.longitudinal_transforms[1].logit);
  EXPECT_TRUE(d.metabolites.transforms[0].lambda.has_value());
}

TEST(Preprocess, TransformRecordInvertsObservedValues) {
  Fixture f(kLon, kMet, kCov);
  PreprocessOptions opt;
  opt.categorical_covariates = {"sex"};
  const Dataset raw = load_dataset(f.paths, opt);
  const Dataset d = preprocess(raw, opt);
  for (int j = 0; j < 2; ++j) {
    const auto& r = d.metabolites.transforms[static_cast<std::size_t>(j)];
    for (int i = 0; i < 3; ++i) {
      if (!d.metabolites.observed(i, j)) continue;
      const double back = inverse_box_cox(d.metabolites.M(i, j) * r.sd + r.mean, *r.lambda);
      EXPECT_NEAR(back, raw.metabolites.M(i, j), 1e-9);
    }
  }
}

TEST(Preprocess, LogitErrorNamesSubjectAndProcess) {
  Fixture f("subject_id,process,time,value\na,fat,0,0.2\nb,fat,0,1.2\nc,fat,0,0.4\n", kMet, kCov);
  PreprocessOptions opt;
  opt.categorical_covariates = {"sex"};
  opt.logit_processes = {"fat"};
  try {
    preprocess(load_dataset(f.paths, opt), opt);
    FAIL();
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("'b'"), std::string::npos);
    EXPECT_NE(msg.find("fat"), std::string::npos);
  }
}

TEST(Preprocess, Deterministic) {
  Fixture f(kLon, kMet, kCov);
  PreprocessOptions opt;
  opt.categorical_covariates = {"sex"};
  const Dataset a = preprocess(load_dataset(f.paths, opt), opt);
  const Dataset b = preprocess(load_dataset(f.paths, opt), opt);
  EXPECT_EQ(transforms_json(a), transforms_json(b));
  EXPECT_TRUE(a.metabolites.M.array().isNaN().cwiseEqual(b.metabolites.M.array().isNaN()).all());
  for (Eigen::Index i = 0; i < a.metabolites.M.size(); ++i) {
    const double x = a.metabolites.M.data()[i], y = b.metabolites.M.data()[i];
    if (!std::isnan(x)) {
      EXPECT_EQ(x, y);
    }
  }
}
