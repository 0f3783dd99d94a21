import asyncio

from meetup.botclient import BotPlayer, play_games, type_from_synthetic_id
from test_server import start_server


class TestSyntheticIdLabels:
    def test_plain_type(self):
        assert type_from_synthetic_id("kitchen_03") == "kitchen"

    def test_slashed_type(self):
        assert type_from_synthetic_id("jacuzzi__indoor_00") == "jacuzzi/indoor"

    def test_unknown_identifier(self):
        assert type_from_synthetic_id("ade20k-7781.jpg") is None
        assert type_from_synthetic_id("spaceship_01") is None


class TestBotPlay:
    def test_two_wanderers_complete_a_game(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path, time_limit=30.0)
            try:
                outcomes = await asyncio.gather(
                    BotPlayer("127.0.0.1", server.bot_port, "wanderer",
                              seed=1, poll_interval=0.05, max_steps=4).play(),
                    BotPlayer("127.0.0.1", server.bot_port, "wanderer",
                              seed=2, poll_interval=0.05, max_steps=4).play(),
                )
            finally:
                await server.stop()
            return outcomes

        outcomes = asyncio.run(scenario())
        assert len(outcomes) == 2
        assert outcomes[0] == outcomes[1]
        assert outcomes[0] in ("success", "same_type_different_room",
                               "not_in_target_type", "aborted")

    def test_describer_pair_over_the_wire(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path, time_limit=3.0, seed_base=11)
            try:
                outcomes = await asyncio.gather(
                    play_games("127.0.0.1", server.bot_port, "describer",
                               seed=5, poll_interval=0.05),
                    play_games("127.0.0.1", server.bot_port, "describer",
                               seed=6, poll_interval=0.05),
                )
            finally:
                await server.stop()
            return [o for group in outcomes for o in group]

        outcomes = asyncio.run(scenario())
        # describers either genuinely meet or run out the (short) clock
        assert all(o in ("success", "aborted") for o in outcomes)

    def test_oracle_rejected(self):
        import pytest

        with pytest.raises(ValueError):
            BotPlayer("127.0.0.1", 1, "oracle")
