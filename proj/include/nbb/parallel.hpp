#pragma once

namespace nbb {

/// Sets the worker count used by the internal parallel loops. Values < 1
/// restore the runtime default. Results never depend on this setting.
void set_num_threads(int threads);
int num_threads();

}  // namespace nbb
