#!/usr/bin/env python3
"""Decode a video with ffmpeg and write the raw-frame stream shortscribe reads.

Output: one header line "W H FPS\\n", then per frame W*H gray bytes followed by
W*H*3 RGB24 bytes. Install on PATH as ffmpeg-rawframes (the default
decoder_command) or point SS_DECODER_CMD at it.
"""

import json
import subprocess
import sys


def probe(path):
    out = subprocess.run(
        ["ffprobe", "-v", "error", "-select_streams", "v:0",
         "-show_entries", "stream=width,height,r_frame_rate", "-of", "json", path],
        check=True, capture_output=True).stdout
    s = json.loads(out)["streams"][0]
    num, den = s["r_frame_rate"].split("/")
    return int(s["width"]), int(s["height"]), float(num) / float(den)


def frames(path, pix_fmt, size):
    p = subprocess.Popen(
        ["ffmpeg", "-v", "error", "-i", path, "-map", "0:v:0",
         "-f", "rawvideo", "-pix_fmt", pix_fmt, "-"],
        stdout=subprocess.PIPE)
    while True:
        buf = p.stdout.read(size)
        if len(buf) < size:
            break
        yield buf
    p.wait()
    if p.returncode != 0:
        sys.exit(p.returncode)


def main():
    if len(sys.argv) != 2:
        sys.exit("usage: ffmpeg_rawframes.py VIDEO")
    path = sys.argv[1]
    w, h, fps = probe(path)
    out = sys.stdout.buffer
    out.write(f"{w} {h} {fps:g}\n".encode())
    for gray, rgb in zip(frames(path, "gray", w * h), frames(path, "rgb24", w * h * 3)):
        out.write(gray)
        out.write(rgb)
    out.flush()


if __name__ == "__main__":
    main()
