package org.acme.clinic;

import org.framework.web.*;

public class PingController {

    @GetMapping("/ping")
    public String ping() {
        return "pong";
    }
}
