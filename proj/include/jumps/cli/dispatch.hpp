#pragma once

namespace jumps {

// Exit codes: 0 ok, 1 usage or configuration error, 2 data error, 3 numerical
// abort.
int dispatch(int argc, const char* const* argv);

}  // namespace jumps
