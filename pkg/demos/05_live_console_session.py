"""Driving the telemetry service the way an operator console does.

Starts the server on an ephemeral port, creates a session over plain TCP,
runs the laser for about a second, then reconnects with ``since_seq`` to
show the gap-free catch-up a real console relies on after a dropped
connection.
"""

import asyncio
import json

from pamon.service import TelemetryService


async def send(writer, **message):
    writer.write((json.dumps(message) + "\n").encode())
    await writer.drain()


async def recv(reader):
    return json.loads(await reader.readline())


def show(msg):
    if msg["type"] == "telemetry":
        r = msg["record"]
        print(f"  seq {msg['seq']:>3}  pulse {r['pulse_index']:>2}  "
              f"t={r['irradiation_time']:.1f}s  {r['amplitude']:.3f} V  "
              f"stage {r['stage']}")
    else:
        extras = {k: v for k, v in msg.items()
                  if k in ("state", "laser_on", "command", "scenario")}
        print(f"  seq {msg['seq']:>3}  {msg['type']}  {extras}")


async def main():
    service = TelemetryService()
    host, port = await service.start("127.0.0.1", 0)
    print(f"service on {host}:{port}\n")

    reader, writer = await asyncio.open_connection(host, port)
    await send(writer, type="create_session", scenario="phantom_tattoo",
               seed=11)
    created = await recv(reader)
    sid = created["session_id"]
    show(created)

    await send(writer, type="control", session_id=sid, command="laser_on")
    show(await recv(reader))

    print("\nlive telemetry (5 pulses/s while the laser is on):")
    for _ in range(6):
        show(await recv(reader))

    await send(writer, type="control", session_id=sid, command="laser_off")
    # telemetry already queued may arrive before the state ack; drain until
    # the laser_off acknowledgment shows up
    while True:
        msg = await recv(reader)
        show(msg)
        if msg["type"] == "state" and msg["command"] == "laser_off":
            last_seq = msg["seq"]
            break

    print(f"\nreconnecting and subscribing from seq 3 "
          f"(pretending we saw only the first 3 messages):")
    reader2, writer2 = await asyncio.open_connection(host, port)
    await send(writer2, type="subscribe", session_id=sid, since_seq=3)
    caught_up = 0
    while True:
        msg = await recv(reader2)
        caught_up += 1
        if msg["seq"] >= last_seq:
            break
    print(f"  received {caught_up} missed messages "
          f"(seqs 4..{last_seq}), none duplicated")

    await send(writer, type="control", session_id=sid, command="end_session")
    show(await recv(reader))

    writer.close()
    writer2.close()
    await service.stop()
    print("\nservice stopped")


asyncio.run(main())
