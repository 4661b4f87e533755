#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epf/features.hpp"
#include "epf/gbdt.hpp"
#include "epf/linmod.hpp"

namespace epf {

// Uniform model surface for the evaluation protocols: fit on train/validation
// row windows of a feature matrix, then forecast any row window.
class Forecaster {
  public:
    virtual ~Forecaster() = default;
    virtual std::string name() const = 0;
    virtual bool needs_training() const { return true; }
    virtual void fit(const FeatureMatrix& m, const RowRange& train, const RowRange& val) = 0;
    virtual std::vector<double> predict(const FeatureMatrix& m, const RowRange& rows) const = 0;
};

// Repeats the target observed `horizon` hours earlier. Rows earlier than the
// horizon cannot be forecast and throw.
class NaiveForecaster final : public Forecaster {
  public:
    explicit NaiveForecaster(int horizon_hours);
    std::string name() const override;
    bool needs_training() const override { return false; }
    void fit(const FeatureMatrix&, const RowRange&, const RowRange&) override {}
    std::vector<double> predict(const FeatureMatrix& m, const RowRange& rows) const override;

  private:
    int horizon_hours_;
};

class RidgeForecaster final : public Forecaster {
  public:
    explicit RidgeForecaster(std::vector<double> lambda_grid = kDefaultLambdaGrid,
                             std::vector<std::size_t> columns = {});
    std::string name() const override { return "ridge"; }
    void fit(const FeatureMatrix& m, const RowRange& train, const RowRange& val) override;
    std::vector<double> predict(const FeatureMatrix& m, const RowRange& rows) const override;

    void set_model(RidgeModel model) { model_ = std::move(model); }
    const RidgeModel& model() const;

  private:
    std::vector<double> grid_;
    std::vector<std::size_t> columns_;  // empty = all
    std::optional<RidgeModel> model_;
};

class GBDTForecaster final : public Forecaster {
  public:
    explicit GBDTForecaster(GBDTConfig config, std::vector<std::size_t> columns = {},
                            std::string name = "gbdt");
    std::string name() const override { return name_; }
    void fit(const FeatureMatrix& m, const RowRange& train, const RowRange& val) override;
    std::vector<double> predict(const FeatureMatrix& m, const RowRange& rows) const override;

    void set_model(GBDTModel model) { model_ = std::move(model); }
    const GBDTModel& model() const;

  private:
    GBDTConfig config_;
    std::vector<std::size_t> columns_;
    std::string name_;
    std::optional<GBDTModel> model_;

    std::vector<std::size_t> resolve_columns(const FeatureMatrix& m) const;
};

}  // namespace epf
