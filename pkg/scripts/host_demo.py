#!/usr/bin/env python3
"""Scripted host harness showing the flat embedding API end to end.

Plays the bundled Loading tacton on a mock device and ramps the
`progress` parameter from 0 to 100, polling status along the way, the
same shape an external application's integration loop takes.
"""

import time

from adaptics import api, library


def main() -> int:
    handle = api.init_engine(use_mock_device=True, rate=40000, batch=40)
    try:
        api.play_tacton_immediate(handle, str(library.library_path("Loading")))
        for i in range(0, 101):
            api.update_user_parameter(handle, "progress", i)
            time.sleep(0.02)
            if i % 25 == 0:
                status = api.engine_status(handle)
                print(f"progress={i:3d}  device_time={status['device_time']:.3f}s "
                      f"playing={status['playing']}")
        api.stop_playback(handle)
        print("final:", api.engine_status(handle))
    finally:
        api.deinit_engine(handle)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
