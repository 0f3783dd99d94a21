"""MeetUp!: a two-player meet-in-the-same-room coordination game.

Subpackages cover the full pipeline: procedural gameboard generation
(:mod:`meetup.board`), the rules engine (:mod:`meetup.engine`), the network
server (:mod:`meetup.server`), scripted agents and an episode simulator
(:mod:`meetup.agents`), and corpus statistics over recorded episodes
(:mod:`meetup.analytics`).
"""

__version__ = "0.1.0"
